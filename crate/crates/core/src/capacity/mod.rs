//! Monte Carlo Newtonian capacity `Cap(A) = sum_{x in A} P^x(T_A = inf)`,
//! where `T_A` is the first return time to `A` after time zero.
//!
//! "Never returns" is approximated by reaching distance
//! `radius_factor * diam(A)` from the centroid of `A` before hitting `A`.
//! Far from `A` the walk is advanced by sphere jumps: when the walker is at
//! Euclidean distance `r` from every point of `A`, the lattice walk cannot
//! touch `A` before leaving the ball of radius `r - sqrt(d)` around it, so
//! that excursion is replaced by a jump to a uniform point on the sphere
//! (the diffusive exit law, rounded to the lattice). Close to `A`
//! (`r < jump_threshold`) the walk takes ordinary lattice steps.

mod kdtree;

pub use kdtree::KdTree;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_dim, LatticePoint};
use crate::observables::PointTable;
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub set_size: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub trials_per_point: u32,
    pub escapes: u64,
    pub escape_radius: f64,
    pub radius_factor: f64,
}

const REFRESH_DIFFUSION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacityConfig {
    /// Escape radius as a multiple of the set diameter; at least 4.
    pub radius_factor: f64,
    pub trials_per_point: u32,
    pub seed: u64,
    /// Minimum distance to the set before sphere jumps are used; `None`
    /// disables jumps (pure lattice walk).
    pub jump_threshold: Option<f64>,
    /// Lattice steps between nearest-distance refreshes near the set.
    pub refresh_steps: u32,
    /// Relative slack of the nearest-distance search; jumps use the
    /// resulting lower bound.
    pub search_slack: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self { radius_factor: 16.0, trials_per_point: 200, seed: 0, jump_threshold: Some(6.0), refresh_steps: 4, search_slack: 0.0 }
    }
}

impl CapacityConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        check_dim(d)?;
        if self.radius_factor.is_nan() || self.radius_factor < 4.0 || self.radius_factor.is_infinite() {
            return Err(Error::InvalidParameter(format!("radius factor {} must be at least 4", self.radius_factor)));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidParameter("trials_per_point must be positive".into()));
        }
        if let Some(t) = self.jump_threshold {
            if t.is_nan() || t < (d as f64).sqrt() + 1.0 {
                return Err(Error::InvalidParameter(format!("jump threshold {t} must exceed sqrt(d) + 1")));
            }
        }
        if self.search_slack.is_nan() || self.search_slack < 0.0 {
            return Err(Error::InvalidParameter("search_slack must be non-negative".into()));
        }
        if self.refresh_steps == 0 {
            return Err(Error::InvalidParameter("refresh_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Capacity estimate of a finite set with the default walker settings.
pub fn capacity_estimate(
    points: &[LatticePoint],
    d: usize,
    radius_factor: f64,
    trials_per_point: u32,
    seed: u64,
) -> Result<CapacityEstimate> {
    let cfg = CapacityConfig { radius_factor, trials_per_point, seed, ..Default::default() };
    let mut table = PointTable::with_capacity(d, points.len());
    for p in points {
        if p.dim() != d {
            return Err(Error::InvalidParameter(format!("point of dimension {} in a set of dimension {d}", p.dim())));
        }
        table.intern(p.coords());
    }
    capacity_of(&table, &cfg)
}

/// Capacity estimate of the distinct points held by `set`.
pub fn capacity_of(set: &PointTable, cfg: &CapacityConfig) -> Result<CapacityEstimate> {
    let escaper = Escaper::new(set, cfg)?;
    let per_point: Vec<u32> =
        (0..set.len()).into_par_iter().map(|i| escaper.escapes_from(i as u32, cfg.seed)).collect();
    Ok(escaper.summarize(&per_point))
}

/// Escape-walk sampler for one set.
#[derive(Debug)]
pub struct Escaper<'a> {
    set: &'a PointTable,
    tree: KdTree,
    d: usize,
    centroid: Vec<f64>,
    set_radius: f64,
    escape_radius: f64,
    cfg: CapacityConfig,
}

impl<'a> Escaper<'a> {
    pub fn new(set: &'a PointTable, cfg: &CapacityConfig) -> Result<Self> {
        let d = set.dim();
        cfg.validate(d)?;
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let count = set.len() as f64;
        let mut centroid = vec![0.0; d];
        for p in set.coords().chunks_exact(d) {
            for (c, &x) in centroid.iter_mut().zip(p) {
                *c += x as f64;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= count);
        let set_radius = set
            .coords()
            .chunks_exact(d)
            .map(|p| p.iter().zip(&centroid).map(|(&x, c)| (x as f64 - c).powi(2)).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt();
        let escape_radius = cfg.radius_factor * diameter_bound(set_radius);
        Ok(Self { set, tree: KdTree::new(d, set.coords()), d, centroid, set_radius, escape_radius, cfg: *cfg })
    }

    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    /// Number of escapes among `trials_per_point` walks from point `index`,
    /// drawn from stream `index` of `seed`.
    pub fn escapes_from(&self, index: u32, seed: u64) -> u32 {
        let mut rng = stream_rng(seed, index as u64);
        let start = self.set.point(index).to_vec();
        let mut pos = vec![0i64; self.d];
        let mut scratch = vec![0f64; self.d];
        (0..self.cfg.trials_per_point)
            .filter(|_| {
                pos.copy_from_slice(&start);
                self.escapes(&mut pos, &mut scratch, &mut rng)
            })
            .count() as u32
    }

    fn centroid_distance(&self, pos: &[i64]) -> f64 {
        pos.iter().zip(&self.centroid).map(|(&x, c)| (x as f64 - c).powi(2)).sum::<f64>().sqrt()
    }

    /// Lower bound on the Euclidean distance from `pos` to the set.
    fn clearance(&self, pos: &[i64]) -> f64 {
        let far = self.centroid_distance(pos) - self.set_radius;
        if far > self.set_radius {
            far
        } else {
            self.tree.approx_nearest(pos, self.cfg.search_slack) / (1.0 + self.cfg.search_slack)
        }
    }

    fn escapes(&self, pos: &mut [i64], dir: &mut [f64], rng: &mut StreamRng) -> bool {
        let directions = 2 * self.d as u32;
        let margin = (self.d as f64).sqrt();
        // Lower bound on the distance to the set; the start is in the set.
        let mut clearance = 0.0f64;
        let mut since_refresh = 0;
        let mut wait = 0;
        loop {
            let r = rng.random_range(0..directions) as usize;
            pos[r >> 1] += if r & 1 == 0 { 1 } else { -1 };
            clearance -= 1.0;
            since_refresh += 1;
            if clearance < 1.0 && self.set.contains(pos) {
                return false;
            }
            let Some(threshold) = self.cfg.jump_threshold else {
                if self.centroid_distance(pos) >= self.escape_radius {
                    return true;
                }
                continue;
            };
            if since_refresh < wait && clearance < threshold {
                continue;
            }
            since_refresh = 0;
            clearance = self.clearance(pos);
            while clearance >= threshold {
                if self.centroid_distance(pos) >= self.escape_radius {
                    return true;
                }
                let jump = clearance - margin;
                let mut norm = 0.0;
                for x in dir.iter_mut() {
                    *x = rng.sample(StandardNormal);
                    norm += *x * *x;
                }
                let scale = jump / norm.sqrt();
                for (p, x) in pos.iter_mut().zip(dir.iter()) {
                    *p += (*x * scale).round() as i64;
                }
                clearance = self.clearance(pos);
            }
            if self.centroid_distance(pos) >= self.escape_radius {
                return true;
            }
            // wait roughly the diffusive time needed to cover the gap
            let gap = threshold - clearance;
            wait = (self.cfg.refresh_steps as f64).max(gap * gap * REFRESH_DIFFUSION) as u32;
        }
    }

    pub fn summarize(&self, per_point: &[u32]) -> CapacityEstimate {
        let trials = self.cfg.trials_per_point as f64;
        let mut estimate = 0.0;
        let mut variance = 0.0;
        let mut escapes = 0u64;
        for &e in per_point {
            let p = e as f64 / trials;
            estimate += p;
            if trials > 1.0 {
                variance += p * (1.0 - p) / (trials - 1.0);
            }
            escapes += e as u64;
        }
        CapacityEstimate {
            set_size: per_point.len(),
            estimate,
            std_error: variance.sqrt(),
            trials_per_point: self.cfg.trials_per_point,
            escapes,
            escape_radius: self.escape_radius,
            radius_factor: self.cfg.radius_factor,
        }
    }
}

/// `2 * max |x - centroid|`, which lies in `[diam, 2 diam]`; at least 1 so a
/// single point still gets a finite escape sphere.
fn diameter_bound(set_radius: f64) -> f64 {
    (2.0 * set_radius).max(1.0)
}

/// Estimates at several radius factors with common random numbers.
pub fn radius_sweep(set: &PointTable, factors: &[f64], cfg: &CapacityConfig) -> Result<Vec<CapacityEstimate>> {
    factors
        .iter()
        .map(|&radius_factor| capacity_of(set, &CapacityConfig { radius_factor, ..*cfg }))
        .collect()
}
