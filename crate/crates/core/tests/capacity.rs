use rwrange_core::capacity::{capacity_estimate, capacity_of, radius_sweep, CapacityConfig};
use rwrange_core::observables::Trace;
use rwrange_core::{simulate_walk, LatticePoint};

/// `e^{-x} I_0(x)`: power series for small `x`, Hankel expansion for large.
fn scaled_bessel_i0(x: f64) -> f64 {
    if x < 30.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let q = x * x / 4.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (8.0 * k as f64 * x);
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Green's function of the walk on Z^4 at the origin,
/// `int_0^inf e^{-t} I_0(t/4)^4 dt`, by Simpson's rule after `t = s / (1 - s)`.
fn green_at_origin() -> f64 {
    green_simpson(200_000)
}

fn green_simpson(m: usize) -> f64 {
    let f = |s: f64| {
        if s >= 1.0 {
            return (2.0 / std::f64::consts::PI).powi(2);
        }
        let t = s / (1.0 - s);
        scaled_bessel_i0(t / 4.0).powi(4) / (1.0 - s).powi(2)
    };
    let h = 1.0 / m as f64;
    let mut sum = f(0.0) + f(1.0);
    for i in 1..m {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn points(coords: &[&[i64]]) -> Vec<LatticePoint> {
    coords.iter().map(|c| LatticePoint::new(c.to_vec()).unwrap()).collect()
}

#[test]
fn green_function_quadrature_is_sane() {
    let g = green_at_origin();
    assert!((g - green_simpson(50_000)).abs() < 1e-9, "{g}");
    // returning within two steps already has probability 1/8
    let returns = 1.0 - 1.0 / g;
    assert!(returns > 0.125 && returns < 0.5, "{g}");
}

#[test]
fn single_point_matches_escape_probability() {
    let escape = 1.0 / green_at_origin();
    let est = capacity_estimate(&points(&[&[0, 0, 0, 0]]), 4, 64.0, 40_000, 11).unwrap();
    assert!(
        (est.estimate - escape).abs() < 4.0 * est.std_error + 0.003,
        "estimate {} +- {} vs {escape}",
        est.estimate,
        est.std_error
    );
}

#[test]
fn distant_pair_is_nearly_additive() {
    let single = capacity_estimate(&points(&[&[0, 0, 0, 0]]), 4, 16.0, 20_000, 5).unwrap();
    let pair = capacity_estimate(&points(&[&[0, 0, 0, 0], &[1000, 0, 0, 0]]), 4, 16.0, 20_000, 6).unwrap();
    let sigma = pair.std_error.hypot(2.0 * single.std_error);
    assert!(
        (pair.estimate - 2.0 * single.estimate).abs() < 4.0 * sigma + 0.003,
        "{pair:?} vs 2 x {single:?}"
    );
}

#[test]
fn monotone_and_subadditive_on_walk_ranges() {
    let path = simulate_walk(5, 800, 21, 0).unwrap();
    let cfg = CapacityConfig { trials_per_point: 60, seed: 2, ..Default::default() };
    let cap = |a: usize, b: usize| capacity_of(Trace::of_segment(path.segment(a, b).unwrap()).points(), &cfg).unwrap();
    let first = cap(0, 400);
    let second = cap(400, 800);
    let whole = cap(0, 800);
    let sigma = |x: f64, y: f64| x.hypot(y);
    assert!(first.estimate <= whole.estimate + 3.0 * sigma(first.std_error, whole.std_error));
    assert!(second.estimate <= whole.estimate + 3.0 * sigma(second.std_error, whole.std_error));
    let parts = first.estimate + second.estimate;
    let parts_se = sigma(first.std_error, second.std_error);
    assert!(whole.estimate <= parts + 3.0 * sigma(parts_se, whole.std_error), "{whole:?} {first:?} {second:?}");
}

#[test]
fn larger_escape_radius_changes_little() {
    let path = simulate_walk(4, 2000, 3, 0).unwrap();
    let trace = Trace::new(&path);
    let cfg = CapacityConfig { trials_per_point: 4, seed: 8, ..Default::default() };
    let sweep = radius_sweep(trace.points(), &[16.0, 64.0], &cfg).unwrap();
    assert_eq!(sweep.len(), 2);
    assert!(sweep[1].escape_radius > sweep[0].escape_radius);
    let drift = (sweep[1].estimate - sweep[0].estimate).abs() / sweep[0].estimate;
    assert!(drift < 0.05, "{sweep:?}");
}
