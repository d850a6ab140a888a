//! Diagnostics for Monte Carlo samples: log-log survival fits for cross
//! terms, variance growth across an `n` grid, and normality of the
//! standardized observable.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::lattice::simulate_walk;
use crate::mc::map_streams;
use crate::observables::{ObservableKind, PathObservables, ResistanceSolveConfig};
use crate::rng::derive_seed;

pub const TAIL_GRID_POINTS: usize = 24;
pub const MIN_FIT_POINTS: usize = 8;
pub const MIN_TAIL_SAMPLES: usize = 1000;
pub const MIN_VARIANCE_SAMPLES: usize = 500;
pub const MIN_CLT_SAMPLES: usize = 1000;

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!("line fit needs two or more points, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical `P(X >= l)` from ascending-sorted samples.
pub fn survival(sorted_samples: &[f64], l: f64) -> f64 {
    let below = sorted_samples.partition_point(|&x| x < l);
    (sorted_samples.len() - below) as f64 / sorted_samples.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Grid points with non-zero survival that entered the fit.
    pub n_points: usize,
    /// `(l, P(E >= l))` for every grid point used.
    pub grid: Vec<(f64, f64)>,
}

/// Fit `log P(E >= l)` against `log l` on a geometric grid of
/// [`TAIL_GRID_POINTS`] values spanning `window`. Grid points beyond the
/// largest sample have zero survival and are dropped.
pub fn fit_tail_exponent(samples: &[f64], window: (f64, f64)) -> Result<TailFit> {
    let (l_min, l_max) = window;
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least {MIN_TAIL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(l_min >= 1.0 && l_min < l_max && l_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("tail window [{l_min}, {l_max}] must satisfy 1 <= l_min < l_max")));
    }
    let data = sorted(samples);
    let ratio = (l_max / l_min).ln() / (TAIL_GRID_POINTS - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..TAIL_GRID_POINTS)
        .map(|j| {
            let l = l_min * (ratio * j as f64).exp();
            (l, survival(&data, l))
        })
        .filter(|&(_, s)| s > 0.0)
        .collect();
    if grid.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "only {} grid points with non-zero survival in [{l_min}, {l_max}]",
            grid.len()
        )));
    }
    let xs: Vec<f64> = grid.iter().map(|(l, _)| l.ln()).collect();
    let ys: Vec<f64> = grid.iter().map(|(_, s)| s.ln()).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(TailFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        l_min,
        l_max,
        n_points: grid.len(),
        grid,
    })
}

/// Unbiased sample mean and variance.
pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}

/// Delete-one jackknife standard error of the unbiased sample variance.
pub fn jackknife_variance_se(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let (mean, var) = mean_variance(samples);
    let ss = var * (n - 1.0);
    let leave_out = |x: f64| (ss - n / (n - 1.0) * (x - mean).powi(2)) / (n - 2.0);
    let avg = samples.iter().map(|&x| leave_out(x)).sum::<f64>() / n;
    let spread: f64 = samples.iter().map(|&x| (leave_out(x) - avg).powi(2)).sum();
    ((n - 1.0) / n * spread).sqrt()
}

/// Candidate growth laws for `Var(X_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthLaw {
    Linear,
    NLogN,
    ThreeHalves,
    SquareOverLogSquare,
}

impl GrowthLaw {
    pub const ALL: [GrowthLaw; 4] =
        [GrowthLaw::Linear, GrowthLaw::NLogN, GrowthLaw::ThreeHalves, GrowthLaw::SquareOverLogSquare];

    pub fn eval(self, n: f64) -> f64 {
        match self {
            GrowthLaw::Linear => n,
            GrowthLaw::NLogN => n * n.ln(),
            GrowthLaw::ThreeHalves => n.powf(1.5),
            GrowthLaw::SquareOverLogSquare => n * n / n.ln().powi(2),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GrowthLaw::Linear => "n",
            GrowthLaw::NLogN => "n log n",
            GrowthLaw::ThreeHalves => "n^1.5",
            GrowthLaw::SquareOverLogSquare => "n^2/log^2 n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub sample_count: usize,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub law: GrowthLaw,
    /// Coefficient of determination of `log Var = c + log f(n)` (slope held
    /// at one); can be negative for a law that fits worse than a constant.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceScan {
    pub kind: ObservableKind,
    pub d: usize,
    pub grid: Vec<VariancePoint>,
    /// Free-slope fit of `log Var` on `log n`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub model_scores: Vec<ModelScore>,
    /// `Var / (n log n)` per grid point.
    pub n_log_n_ratio: Vec<f64>,
}

impl VarianceScan {
    pub fn score(&self, law: GrowthLaw) -> f64 {
        self.model_scores.iter().find(|m| m.law == law).map(|m| m.score).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn best_law(&self) -> GrowthLaw {
        self.model_scores
            .iter()
            .max_by(|a, b| a.score.total_cmp(&b.score))
            .map(|m| m.law)
            .expect("four candidate laws")
    }

    /// `max / min` of `Var / (n log n)` across the grid.
    pub fn n_log_n_spread(&self) -> f64 {
        let max = self.n_log_n_ratio.iter().copied().fold(f64::MIN, f64::max);
        let min = self.n_log_n_ratio.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }
}

/// `X[0, n]` on fresh walks, one per stream. The walks of cell `n` are keyed
/// by `derive_seed(seed, n)` so different cells are independent.
pub fn observable_samples(
    d: usize,
    n: usize,
    kind: ObservableKind,
    streams: std::ops::Range<u64>,
    seed: u64,
    cfg: &ResistanceSolveConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let cell_seed = derive_seed(seed, n as u64);
    map_streams(streams, |stream| {
        let path = simulate_walk(d, n, cell_seed, stream)?;
        PathObservables::new(&path, cfg)?.eval(0, n, kind)
    })
}

pub fn validate_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.len() < 2 {
        return Err(Error::InsufficientData("variance scan needs at least two grid points".into()));
    }
    if let Some(&n) = n_grid.iter().find(|n| !n.is_power_of_two() || **n < 2) {
        return Err(Error::InvalidParameter(format!("grid value {n} is not a power of two >= 2")));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn variance_scan(
    kind: ObservableKind,
    d: usize,
    n_grid: &[usize],
    samples_per_n: usize,
    seed: u64,
    cfg: &ResistanceSolveConfig,
) -> Result<VarianceScan> {
    validate_grid(n_grid)?;
    if samples_per_n < MIN_VARIANCE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "variance scan needs at least {MIN_VARIANCE_SAMPLES} samples per n, got {samples_per_n}"
        )));
    }
    let cells = n_grid
        .iter()
        .map(|&n| Ok((n, observable_samples(d, n, kind, 0..samples_per_n as u64, seed, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    variance_scan_from_samples(kind, d, &cells)
}

/// Scan statistics from precomputed `(n, samples)` cells.
pub fn variance_scan_from_samples(kind: ObservableKind, d: usize, cells: &[(usize, Vec<f64>)]) -> Result<VarianceScan> {
    let n_grid: Vec<usize> = cells.iter().map(|(n, _)| *n).collect();
    validate_grid(&n_grid)?;
    let mut grid = Vec::with_capacity(cells.len());
    for (n, samples) in cells {
        if samples.len() < MIN_VARIANCE_SAMPLES {
            return Err(Error::InsufficientData(format!("cell n = {n} has {} samples", samples.len())));
        }
        let (mean, variance) = mean_variance(samples);
        if variance <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        grid.push(VariancePoint {
            n: *n,
            mean,
            variance,
            sample_count: samples.len(),
            std_error: jackknife_variance_se(samples),
        });
    }
    let log_n: Vec<f64> = grid.iter().map(|p| (p.n as f64).ln()).collect();
    let log_var: Vec<f64> = grid.iter().map(|p| p.variance.ln()).collect();
    let fit = least_squares(&log_n, &log_var)?;
    let mean_log_var = log_var.iter().sum::<f64>() / log_var.len() as f64;
    let total: f64 = log_var.iter().map(|v| (v - mean_log_var).powi(2)).sum();
    let model_scores = GrowthLaw::ALL
        .iter()
        .map(|&law| {
            let resid: Vec<f64> = grid.iter().zip(&log_var).map(|(p, v)| v - law.eval(p.n as f64).ln()).collect();
            let c = resid.iter().sum::<f64>() / resid.len() as f64;
            let ss: f64 = resid.iter().map(|r| (r - c).powi(2)).sum();
            ModelScore { law, score: 1.0 - ss / total }
        })
        .collect();
    let n_log_n_ratio = grid.iter().map(|p| p.variance / GrowthLaw::NLogN.eval(p.n as f64)).collect();
    Ok(VarianceScan {
        kind,
        d,
        grid,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        model_scores,
        n_log_n_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub d: usize,
    pub kind: ObservableKind,
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `sup |F_emp - Phi|` of the standardized samples.
    pub ks_distance: f64,
    pub median_abs_standardized: f64,
    pub standardized_mean: f64,
    pub standardized_variance: f64,
}

/// Normality diagnostics of samples standardized by their own mean and
/// unbiased standard deviation.
pub fn clt_report(samples: &[f64], n: usize, d: usize, kind: ObservableKind) -> Result<CltReport> {
    if samples.len() < MIN_CLT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "normality diagnostics need at least {MIN_CLT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (mean, var) = mean_variance(samples);
    if var.is_nan() || var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let std_dev = var.sqrt();
    let z: Vec<f64> = samples.iter().map(|x| (x - mean) / std_dev).collect();
    let count = z.len() as f64;
    let m2 = z.iter().map(|v| v * v).sum::<f64>() / count;
    let m3 = z.iter().map(|v| v.powi(3)).sum::<f64>() / count;
    let m4 = z.iter().map(|v| v.powi(4)).sum::<f64>() / count;
    let (standardized_mean, standardized_variance) = mean_variance(&z);

    let normal = Normal::standard();
    let sorted_z = sorted(&z);
    let ks_distance = sorted_z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal.cdf(v);
            ((i + 1) as f64 / count - f).max(f - i as f64 / count)
        })
        .fold(0.0, f64::max);
    let abs = sorted(&z.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let mid = abs.len() / 2;
    let median_abs_standardized = if abs.len().is_multiple_of(2) { 0.5 * (abs[mid - 1] + abs[mid]) } else { abs[mid] };

    Ok(CltReport {
        n,
        d,
        kind,
        samples: samples.len(),
        mean,
        std_dev,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        ks_distance,
        median_abs_standardized,
        standardized_mean,
        standardized_variance,
    })
}

pub fn clt_diagnostics(
    kind: ObservableKind,
    d: usize,
    n: usize,
    samples: usize,
    seed: u64,
    cfg: &ResistanceSolveConfig,
) -> Result<CltReport> {
    if samples < MIN_CLT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "normality diagnostics need at least {MIN_CLT_SAMPLES} samples, got {samples}"
        )));
    }
    let values = observable_samples(d, n, kind, 0..samples as u64, seed, cfg)?;
    clt_report(&values, n, d, kind)
}
