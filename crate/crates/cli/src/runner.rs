use anyhow::{Context, Result};
use rwrange_core::decomposition::{cross_term_tail_range, dyadic_decompose};
use rwrange_core::mc::map_streams;
use rwrange_core::observables::{
    cut_point_count, cut_point_count_naive, effective_resistance, effective_resistance_dense, graph_distance,
    graph_distance_dijkstra, Trace,
};
use rwrange_core::rng::derive_seed;
use rwrange_core::stats::{clt_report, fit_tail_exponent, observable_samples, variance_scan_from_samples};
use rwrange_core::{capacity, observable, simulate_walk, RangeGraph};
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, ExperimentConfig};
use crate::store::{RunManifest, RunStore, VERSION};

pub const SAMPLES_SCHEMA: u32 = 1;
pub const DECOMPOSITION_SCHEMA: u32 = 2;
pub const CAPACITY_SCHEMA: u32 = 3;
pub const SURVIVAL_SCHEMA: u32 = 4;
pub const VARIANCE_SCHEMA: u32 = 5;
pub const CLT_SCHEMA: u32 = 6;
pub const ORACLE_SCHEMA: u32 = 7;

/// Largest range graph compared against the dense solve.
pub const ORACLE_DENSE_VERTICES: usize = 200;
pub const ORACLE_REL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// Contents of the command's JSON summary.
    pub summary: serde_json::Value,
    /// False when an oracle check found mismatches.
    pub ok: bool,
}

/// Versioned CSV: a `# rwrange-lab v<version> schema=<k>` line, a header
/// row, then `rows`.
pub fn csv_bytes<I, R>(schema: u32, header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = format!("# rwrange-lab v{VERSION} schema={schema}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn core<T>(r: rwrange_core::Result<T>) -> Result<T> {
    r.map_err(anyhow::Error::from)
}

/// Validate `cfg`, then run it on a pool of `cfg.threads` workers.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("building worker pool")?;
    pool.install(|| {
        let mut store = RunStore::open(cfg)?;
        let (summary, ok) = match cfg.command {
            Command::Simulate => simulate(cfg, &mut store)?,
            Command::Tails => tails(cfg, &mut store)?,
            Command::Variance => variance(cfg, &mut store)?,
            Command::Clt => clt(cfg, &mut store)?,
            Command::Decompose => decompose(cfg, &mut store)?,
            Command::Capacity => capacity_run(cfg, &mut store)?,
            Command::OracleCheck => oracle_check(cfg, &mut store)?,
        };
        store.write_file("summary.json", &json_bytes(&summary)?)?;
        Ok(RunOutcome { manifest: store.finish()?, summary, ok })
    })
}

fn sample_rows<'a>(
    cfg: &'a ExperimentConfig,
    n: usize,
    values: &'a [f64],
) -> impl Iterator<Item = [String; 6]> + 'a {
    values.iter().enumerate().map(move |(s, v)| {
        [
            cfg.kind.label().to_string(),
            cfg.d.to_string(),
            n.to_string(),
            v.to_string(),
            cfg.seed.to_string(),
            s.to_string(),
        ]
    })
}

const SAMPLE_HEADER: [&str; 6] = ["kind", "d", "n", "value", "seed", "stream"];

fn simulate(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let (n, samples) = (cfg.n_required()?, cfg.samples_required()? as u64);
    let values = store.cell(&format!("simulate-n{n}"), samples, 1, |range| {
        core(map_streams(range, |s| observable(simulate_walk(cfg.d, n, cfg.seed, s)?.full(), cfg.kind, &cfg.solver)))
    })?;
    let mut dumps = Vec::new();
    for s in 0..samples {
        core(simulate_walk(cfg.d, n, cfg.seed, s))?.write_dump(&mut dumps)?;
    }
    store.write_file("walks.bin", &dumps)?;
    store.write_file("samples.csv", &csv_bytes(SAMPLES_SCHEMA, &SAMPLE_HEADER, sample_rows(cfg, n, &values))?)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok((json!({ "command": "simulate", "d": cfg.d, "n": n, "kind": cfg.kind, "walks": samples, "mean": mean }), true))
}

fn tails(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let (n, samples) = (cfg.n_required()?, cfg.samples_required()? as u64);
    let values = store.cell(&format!("tails-n{n}"), samples, 1, |range| {
        core(cross_term_tail_range(cfg.d, n, cfg.kind, range, cfg.seed, &cfg.solver))
    })?;
    store.write_file("samples.csv", &csv_bytes(SAMPLES_SCHEMA, &SAMPLE_HEADER, sample_rows(cfg, n, &values))?)?;
    let fit = core(fit_tail_exponent(&values, cfg.window()?))?;
    let rows = fit.grid.iter().map(|(l, s)| [l.to_string(), s.to_string()]);
    store.write_file("tail_survival.csv", &csv_bytes(SURVIVAL_SCHEMA, &["l", "survival"], rows)?)?;
    let summary = json!({ "command": "tails", "d": cfg.d, "n": n, "kind": cfg.kind, "samples": samples, "fit": fit });
    Ok((summary, true))
}

fn variance(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let samples = cfg.samples_required()? as u64;
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &n in cfg.grid_required()? {
        let values = store.cell(&format!("variance-n{n}"), samples, 1, |range| {
            core(observable_samples(cfg.d, n, cfg.kind, range, cfg.seed, &cfg.solver))
        })?;
        rows.extend(sample_rows(cfg, n, &values));
        cells.push((n, values));
    }
    store.write_file("samples.csv", &csv_bytes(SAMPLES_SCHEMA, &SAMPLE_HEADER, rows)?)?;
    let scan = core(variance_scan_from_samples(cfg.kind, cfg.d, &cells))?;
    let rows = scan.grid.iter().map(|p| {
        [p.n.to_string(), p.mean.to_string(), p.variance.to_string(), p.sample_count.to_string(), p.std_error.to_string()]
    });
    let header = ["n", "mean", "variance", "sample_count", "std_error"];
    store.write_file("variance_scan.csv", &csv_bytes(VARIANCE_SCHEMA, &header, rows)?)?;
    let summary = json!({
        "command": "variance",
        "best_law": scan.best_law(),
        "n_log_n_spread": scan.n_log_n_spread(),
        "scan": scan,
    });
    Ok((summary, true))
}

fn clt(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let (n, samples) = (cfg.n_required()?, cfg.samples_required()? as u64);
    let values = store.cell(&format!("clt-n{n}"), samples, 1, |range| {
        core(observable_samples(cfg.d, n, cfg.kind, range, cfg.seed, &cfg.solver))
    })?;
    store.write_file("samples.csv", &csv_bytes(SAMPLES_SCHEMA, &SAMPLE_HEADER, sample_rows(cfg, n, &values))?)?;
    let rep = core(clt_report(&values, n, cfg.d, cfg.kind))?;
    let header = [
        "n",
        "d",
        "kind",
        "samples",
        "mean",
        "std_dev",
        "skewness",
        "excess_kurtosis",
        "ks_distance",
        "median_abs_standardized",
    ];
    let row = [
        rep.n.to_string(),
        rep.d.to_string(),
        rep.kind.label().to_string(),
        rep.samples.to_string(),
        rep.mean.to_string(),
        rep.std_dev.to_string(),
        rep.skewness.to_string(),
        rep.excess_kurtosis.to_string(),
        rep.ks_distance.to_string(),
        rep.median_abs_standardized.to_string(),
    ];
    store.write_file("clt.csv", &csv_bytes(CLT_SCHEMA, &header, [row])?)?;
    Ok((json!({ "command": "clt", "report": rep }), true))
}

fn decompose(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let (n, samples) = (cfg.n_required()?, cfg.samples_required()? as u64);
    let levels = cfg.levels;
    let errors_per_sample = (1usize << levels) - 1;
    // per stream: errors level by level, then the identity discrepancy
    let width = errors_per_sample + 1;
    let values = store.cell(&format!("decompose-n{n}"), samples, width, |range| {
        let rows = core(map_streams(range, |s| {
            let path = simulate_walk(cfg.d, n, cfg.seed, s)?;
            let dec = dyadic_decompose(&path, cfg.kind, levels, &cfg.solver)?;
            let mut row: Vec<f64> = dec.errors.iter().flatten().copied().collect();
            row.push(dec.discrepancy());
            Ok(row)
        }))?;
        Ok(rows.concat())
    })?;

    let tolerance = if cfg.kind.is_integral() {
        0.0
    } else {
        levels as f64 * (1u64 << levels) as f64 * 1e-8 * n as f64
    };
    let mut rows = Vec::with_capacity(samples as usize * errors_per_sample);
    let mut level_sum_sq = vec![0.0; levels as usize];
    let mut level_sum = vec![0.0; levels as usize];
    let mut worst = 0.0f64;
    let mut violations = 0u64;
    for (s, rec) in values.chunks_exact(width).enumerate() {
        let mut offset = 0;
        for k in 0..levels as usize {
            let level = &rec[offset..offset + (1 << k)];
            for (l, v) in level.iter().enumerate() {
                rows.push([
                    cfg.kind.label().to_string(),
                    cfg.d.to_string(),
                    n.to_string(),
                    k.to_string(),
                    l.to_string(),
                    v.to_string(),
                    cfg.seed.to_string(),
                    s.to_string(),
                ]);
            }
            let total: f64 = level.iter().sum();
            level_sum[k] += total;
            level_sum_sq[k] += total * total;
            offset += 1 << k;
        }
        let gap = rec[width - 1].abs();
        worst = worst.max(gap);
        if gap > tolerance {
            violations += 1;
        }
    }
    let header = ["kind", "d", "n", "k", "l", "value", "seed", "stream"];
    store.write_file("decomposition.csv", &csv_bytes(DECOMPOSITION_SCHEMA, &header, rows)?)?;
    let count = samples as f64;
    let summary = json!({
        "command": "decompose",
        "d": cfg.d,
        "n": n,
        "kind": cfg.kind,
        "levels": levels,
        "samples": samples,
        "level_mean": level_sum.iter().map(|v| v / count).collect::<Vec<_>>(),
        "level_second_moment": level_sum_sq.iter().map(|v| v / count).collect::<Vec<_>>(),
        "identity_tolerance": tolerance,
        "identity_max_discrepancy": worst,
        "identity_violations": violations,
    });
    Ok((summary, violations == 0))
}

fn capacity_run(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let (n, walks) = (cfg.n_required()?, cfg.samples_required()? as u64);
    let factors = &cfg.radius_factors;
    let width = 3 * factors.len();
    // walks run one after another; each estimate is parallel over the set
    let values = store.cell(&format!("capacity-n{n}"), walks, width, |range| {
        let mut out = Vec::new();
        for s in range {
            let path = core(simulate_walk(cfg.d, n, cfg.seed, s))?;
            let trace = Trace::new(&path);
            // every factor reuses the walk's seed: common random numbers
            let walk_seed = derive_seed(cfg.seed, s);
            for &f in factors {
                let est = core(capacity::capacity_of(trace.points(), &cfg.capacity_config(f, walk_seed)))?;
                out.extend([est.set_size as f64, est.estimate, est.std_error]);
            }
        }
        Ok(out)
    })?;
    let header = ["d", "set_size", "radius_factor", "trials", "estimate", "std_error"];
    let mut rows = Vec::new();
    let mut per_factor = vec![0.0; factors.len()];
    for rec in values.chunks_exact(width) {
        for (i, f) in factors.iter().enumerate() {
            let (size, est, se) = (rec[3 * i], rec[3 * i + 1], rec[3 * i + 2]);
            per_factor[i] += est / walks as f64;
            rows.push([
                cfg.d.to_string(),
                size.to_string(),
                f.to_string(),
                cfg.trials_per_point.to_string(),
                est.to_string(),
                se.to_string(),
            ]);
        }
    }
    store.write_file("capacity.csv", &csv_bytes(CAPACITY_SCHEMA, &header, rows)?)?;
    let scale = (n as f64).ln() / n as f64;
    let drift = (per_factor[per_factor.len() - 1] - per_factor[0]).abs() / per_factor[0];
    let summary = json!({
        "command": "capacity",
        "d": cfg.d,
        "n": n,
        "walks": walks,
        "radius_factors": factors,
        "mean_estimate": per_factor,
        "normalized": per_factor.iter().map(|c| c * scale).collect::<Vec<_>>(),
        "radius_drift": drift,
    });
    Ok((summary, true))
}

/// Per instance: sweep/naive cut mismatch, BFS/Dijkstra mismatch, whether
/// the dense solve ran, and the relative CG error.
fn oracle_instance(cfg: &ExperimentConfig, d: usize, stream: u64) -> rwrange_core::Result<Vec<f64>> {
    let cell_seed = derive_seed(cfg.seed, d as u64);
    let n = 1 + (derive_seed(cell_seed, stream) % cfg.max_n as u64) as usize;
    let path = simulate_walk(d, n, cell_seed, stream)?;
    let view = path.full();
    let cut = (cut_point_count(view) != cut_point_count_naive(view)) as u8 as f64;
    let g = RangeGraph::build(view)?;
    let bfs = (graph_distance(&g) != graph_distance_dijkstra(&g)) as u8 as f64;
    if g.vertex_count() > ORACLE_DENSE_VERTICES {
        return Ok(vec![cut, bfs, 0.0, 0.0]);
    }
    let cg = effective_resistance(&g, &cfg.solver)?;
    let dense = effective_resistance_dense(&g)?;
    let rel = if dense == 0.0 { cg.abs() } else { (cg - dense).abs() / dense };
    Ok(vec![cut, bfs, 1.0, rel])
}

fn oracle_check(cfg: &ExperimentConfig, store: &mut RunStore) -> Result<(serde_json::Value, bool)> {
    let instances = cfg.instances as u64;
    let (mut cut, mut bfs, mut solved, mut bad_solves) = (0u64, 0u64, 0u64, 0u64);
    let mut worst = 0.0f64;
    for d in 4..=7 {
        let values = store.cell(&format!("oracle-check-d{d}"), instances, 4, |range| {
            Ok(core(map_streams(range, |s| oracle_instance(cfg, d, s)))?.concat())
        })?;
        for rec in values.chunks_exact(4) {
            cut += rec[0] as u64;
            bfs += rec[1] as u64;
            if rec[2] > 0.0 {
                solved += 1;
                worst = worst.max(rec[3]);
                bad_solves += (rec[3] > ORACLE_REL_TOLERANCE) as u64;
            }
        }
    }
    let total = 4 * instances;
    let rows = [
        ["cut-sweep-vs-naive".to_string(), total.to_string(), cut.to_string(), "0".to_string()],
        ["bfs-vs-dijkstra".to_string(), total.to_string(), bfs.to_string(), "0".to_string()],
        ["cg-vs-dense".to_string(), solved.to_string(), bad_solves.to_string(), worst.to_string()],
    ];
    let header = ["check", "instances", "mismatches", "max_error"];
    store.write_file("oracle_check.csv", &csv_bytes(ORACLE_SCHEMA, &header, rows)?)?;
    let summary = json!({
        "command": "oracle-check",
        "max_n": cfg.max_n,
        "instances_per_d": instances,
        "cut_mismatches": cut,
        "bfs_mismatches": bfs,
        "resistance_checked": solved,
        "resistance_mismatches": bad_solves,
        "resistance_max_rel_error": worst,
    });
    Ok((summary, cut == 0 && bfs == 0 && bad_solves == 0))
}
