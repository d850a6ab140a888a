//! Point-to-point effective resistance on a unit-conductance range graph.
//!
//! The fast path first removes dangling trees and contracts chains of
//! degree-two vertices into single weighted edges (both are exact Schur
//! complements), then solves the Laplacian grounded at the sink with
//! preconditioned conjugate gradient. Range graphs in d >= 4 are long
//! chains with sparse loops, so the reduced system is far smaller and its
//! Krylov depth no longer scales with the hop distance.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::graph::RangeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResistanceSolveConfig {
    /// Target `||r|| / ||b||`.
    pub rel_tolerance: f64,
    /// `None` means `20 * sqrt(|V|) + 200`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for ResistanceSolveConfig {
    fn default() -> Self {
        Self { rel_tolerance: 1e-10, max_iterations: None, preconditioner: Preconditioner::Diagonal }
    }
}

impl ResistanceSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance <= 1e-4) {
            return Err(Error::InvalidParameter(format!(
                "rel_tolerance {} outside (0, 1e-4]",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn iteration_budget(&self, vertices: usize) -> usize {
        self.max_iterations.unwrap_or_else(|| 20 * (vertices as f64).sqrt().ceil() as usize + 200)
    }
}

/// Weighted network left after dangling-tree removal and series contraction.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub nodes: usize,
    /// `(u, v, conductance)`, possibly with parallel entries.
    pub edges: Vec<(u32, u32, f64)>,
    pub source: u32,
    pub sink: u32,
}

pub fn reduce(g: &RangeGraph) -> ReducedNetwork {
    let n = g.vertex_count();
    let (s, t) = (g.source(), g.sink());
    let terminal = |v: u32| v == s || v == t;
    let mut degree: Vec<u32> = (0..n as u32).map(|v| g.degree(v) as u32).collect();
    let mut alive = vec![true; n];

    let mut queue: VecDeque<u32> = (0..n as u32).filter(|&v| !terminal(v) && degree[v as usize] == 1).collect();
    while let Some(v) = queue.pop_front() {
        alive[v as usize] = false;
        for &w in g.neighbors(v) {
            if alive[w as usize] {
                degree[w as usize] -= 1;
                if !terminal(w) && degree[w as usize] == 1 {
                    queue.push_back(w);
                }
            }
        }
    }

    const NOT_BRANCH: u32 = u32::MAX;
    let mut index = vec![NOT_BRANCH; n];
    let mut nodes = 0u32;
    for v in 0..n as u32 {
        if alive[v as usize] && (terminal(v) || degree[v as usize] != 2) {
            index[v as usize] = nodes;
            nodes += 1;
        }
    }

    let mut edges = Vec::new();
    for u in 0..n as u32 {
        if index[u as usize] == NOT_BRANCH {
            continue;
        }
        for &first in g.neighbors(u) {
            if !alive[first as usize] {
                continue;
            }
            let (mut prev, mut cur, mut len) = (u, first, 1u32);
            while index[cur as usize] == NOT_BRANCH {
                let next = *g
                    .neighbors(cur)
                    .iter()
                    .find(|&&w| w != prev && alive[w as usize])
                    .expect("chain vertex has two live neighbors");
                prev = cur;
                cur = next;
                len += 1;
            }
            // Each chain is seen from both ends; keep one copy and drop loops.
            if u < cur {
                edges.push((index[u as usize], index[cur as usize], 1.0 / len as f64));
            }
        }
    }
    ReducedNetwork { nodes: nodes as usize, edges, source: index[s as usize], sink: index[t as usize] }
}

/// Grounded Laplacian in compressed-row form over the non-sink nodes.
struct GroundedLaplacian {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl GroundedLaplacian {
    fn new(net: &ReducedNetwork) -> (Self, usize) {
        let sink = net.sink;
        let map = |v: u32| if v < sink { v } else { v - 1 };
        let size = net.nodes - 1;
        let mut diag = vec![0.0; size];
        let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * net.edges.len());
        for &(u, v, c) in &net.edges {
            if u != sink {
                diag[map(u) as usize] += c;
            }
            if v != sink {
                diag[map(v) as usize] += c;
            }
            if u != sink && v != sink {
                triplets.push((map(u), map(v), -c));
                triplets.push((map(v), map(u), -c));
            }
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut offsets = vec![0usize; size + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for (i, j, c) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += c;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            vals.push(c);
            offsets[i as usize + 1] = cols.len();
        }
        for i in 1..=size {
            offsets[i] = offsets[i].max(offsets[i - 1]);
        }
        let source = map(net.source) as usize;
        (Self { offsets, cols, vals, diag }, source)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Effective resistance between the terminals of `g`.
pub fn effective_resistance(g: &RangeGraph, cfg: &ResistanceSolveConfig) -> Result<f64> {
    cfg.validate()?;
    if g.source() == g.sink() {
        return Ok(0.0);
    }
    let net = reduce(g);
    let budget = cfg.iteration_budget(g.vertex_count());
    solve_reduced(&net, cfg, budget)
}

fn solve_reduced(net: &ReducedNetwork, cfg: &ResistanceSolveConfig, budget: usize) -> Result<f64> {
    let (lap, source) = GroundedLaplacian::new(net);
    let size = lap.diag.len();
    let inv_diag: Vec<f64> = match cfg.preconditioner {
        Preconditioner::Diagonal => lap.diag.iter().map(|d| 1.0 / d).collect(),
        Preconditioner::None => vec![1.0; size],
    };
    let mut x = vec![0.0; size];
    let mut r = vec![0.0; size];
    r[source] = 1.0;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; size];
    let mut rz = dot(&r, &z);
    let mut residual = 1.0;
    for _ in 0..budget {
        lap.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..size {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        residual = dot(&r, &r).sqrt();
        if residual <= cfg.rel_tolerance {
            return Ok(x[source]);
        }
        for i in 0..size {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..size {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: budget, residual })
}

pub const DENSE_LIMIT: usize = 2000;

/// Gaussian elimination with partial pivoting on the full grounded
/// Laplacian of the unreduced graph. Reference for [`effective_resistance`].
pub fn effective_resistance_dense(g: &RangeGraph) -> Result<f64> {
    let n = g.vertex_count();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: DENSE_LIMIT });
    }
    let (s, t) = (g.source() as usize, g.sink() as usize);
    if s == t {
        return Ok(0.0);
    }
    let map = |v: usize| if v < t { v } else { v - 1 };
    let m = n - 1;
    let mut a = vec![0.0f64; m * m];
    for v in 0..n {
        if v == t {
            continue;
        }
        let i = map(v);
        a[i * m + i] = g.degree(v as u32) as f64;
        for &w in g.neighbors(v as u32) {
            if w as usize != t {
                a[i * m + map(w as usize)] -= 1.0;
            }
        }
    }
    let mut rhs = vec![0.0; m];
    rhs[map(s)] = 1.0;
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            rhs.swap(col, pivot);
        }
        let diag = a[col * m + col];
        for row in col + 1..m {
            let f = a[row * m + col] / diag;
            if f == 0.0 {
                continue;
            }
            for k in col..m {
                a[row * m + k] -= f * a[col * m + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = rhs[row];
        for k in row + 1..m {
            acc -= a[row * m + k] * x[k];
        }
        x[row] = acc / a[row * m + row];
    }
    Ok(x[map(s)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::simulate_walk;
    use crate::observables::graph::tests::path4;
    use approx::assert_relative_eq;

    #[test]
    fn series_law_on_straight_path() {
        let pts: Vec<[i64; 4]> = (0..=17).map(|i| [0, 0, i, 0]).collect();
        let g = RangeGraph::build(path4(&pts).full()).unwrap();
        let cfg = ResistanceSolveConfig::default();
        assert_relative_eq!(effective_resistance(&g, &cfg).unwrap(), 17.0, max_relative = 1e-12);
        assert_relative_eq!(effective_resistance_dense(&g).unwrap(), 17.0, max_relative = 1e-12);
    }

    #[test]
    fn parallel_law_on_square() {
        let p = path4(&[[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0]]);
        let g = RangeGraph::build(p.full()).unwrap();
        let (s, t) = (g.vertex_of(&[0, 0, 0, 0]).unwrap(), g.vertex_of(&[1, 1, 0, 0]).unwrap());
        let adjacent = g.vertex_of(&[1, 0, 0, 0]).unwrap();
        let g = g.with_terminals(s, t).unwrap();
        let cfg = ResistanceSolveConfig::default();
        assert_relative_eq!(effective_resistance(&g, &cfg).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(effective_resistance_dense(&g).unwrap(), 1.0, max_relative = 1e-12);
        // Adjacent corners: 1 in parallel with 3.
        let g = g.with_terminals(s, adjacent).unwrap();
        assert_relative_eq!(effective_resistance(&g, &cfg).unwrap(), 0.75, max_relative = 1e-12);
    }

    #[test]
    fn coincident_terminals() {
        let p = path4(&[[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]]);
        let g = RangeGraph::build(p.full()).unwrap();
        assert_eq!(effective_resistance(&g, &ResistanceSolveConfig::default()).unwrap(), 0.0);
        assert_eq!(effective_resistance_dense(&g).unwrap(), 0.0);
    }

    #[test]
    fn matches_dense_solve() {
        for d in 4..=6 {
            for s in 0..30 {
                let p = simulate_walk(d, 150, 77, s).unwrap();
                let g = RangeGraph::build(p.full()).unwrap();
                let dense = effective_resistance_dense(&g).unwrap();
                for pre in [Preconditioner::Diagonal, Preconditioner::None] {
                    let cfg = ResistanceSolveConfig { preconditioner: pre, ..Default::default() };
                    let cg = effective_resistance(&g, &cfg).unwrap();
                    assert_relative_eq!(cg, dense, max_relative = 1e-8, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn reduction_keeps_terminals_and_shrinks() {
        let p = simulate_walk(7, 400, 3, 0).unwrap();
        let g = RangeGraph::build(p.full()).unwrap();
        let net = reduce(&g);
        assert!(net.nodes >= 2);
        assert!(net.nodes < g.vertex_count() / 4, "{} of {}", net.nodes, g.vertex_count());
        assert_ne!(net.source, net.sink);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let p = simulate_walk(4, 400, 5, 3).unwrap();
        let g = RangeGraph::build(p.full()).unwrap();
        assert!(reduce(&g).nodes > 3);
        let cfg = ResistanceSolveConfig { max_iterations: Some(1), ..Default::default() };
        match effective_resistance(&g, &cfg) {
            Err(Error::NoConvergence { iterations: 1, residual }) => assert!(residual > 1e-10),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = ResistanceSolveConfig { rel_tolerance: 1e-3, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ResistanceSolveConfig { max_iterations: Some(0), ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(ResistanceSolveConfig::default().iteration_budget(100), 400);
    }

    #[test]
    fn dense_guard() {
        let p = simulate_walk(8, 2600, 1, 0).unwrap();
        let g = RangeGraph::build(p.full()).unwrap();
        assert!(g.vertex_count() > DENSE_LIMIT);
        assert!(matches!(effective_resistance_dense(&g), Err(Error::TooLarge { .. })));
    }
}
