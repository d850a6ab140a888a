//! Split defects of the observables and the dyadic decomposition.
//!
//! For an observable `X` and times `0 < m < t`, the cross term
//! `X[0,m] + X[m,t] - X[0,t]` is non-negative for all three observables.
//! Splitting `[0,n]` repeatedly in halves gives the exact identity
//! `X[0,n] = sum of leaves - sum over levels k < K and blocks l of E(k,l)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{simulate_walk, WalkPath};
use crate::mc::map_streams;
use crate::observables::{ObservableKind, PathObservables, ResistanceSolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTerm {
    pub kind: ObservableKind,
    pub n_left: usize,
    pub n_right: usize,
    pub value: f64,
}

/// `X[0,split] + X[split,end] - X[0,end]` on `path`.
pub fn cross_term(
    path: &WalkPath,
    kind: ObservableKind,
    split: usize,
    end: usize,
    cfg: &ResistanceSolveConfig,
) -> Result<CrossTerm> {
    let mut ev = PathObservables::new(path, cfg)?;
    cross_term_with(&mut ev, kind, split, end)
}

pub fn cross_term_with(
    ev: &mut PathObservables<'_>,
    kind: ObservableKind,
    split: usize,
    end: usize,
) -> Result<CrossTerm> {
    let n = ev.path().len();
    if split == 0 || split >= end || end > n {
        return Err(Error::Split { split, end, n });
    }
    let value = ev.eval(0, split, kind)? + ev.eval(split, end, kind)? - ev.eval(0, end, kind)?;
    Ok(CrossTerm { kind, n_left: split, n_right: end - split, value })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub kind: ObservableKind,
    pub n: usize,
    pub levels: u32,
    /// `X[0, n]`.
    pub total: f64,
    /// `X` over the `2^K` blocks of length `n / 2^K`.
    pub leaves: Vec<f64>,
    /// `errors[k][l]`: left child + right child - parent, where the parent
    /// is block `l` of length `n / 2^k`.
    pub errors: Vec<Vec<f64>>,
}

impl DyadicDecomposition {
    pub fn level_sums(&self) -> Vec<f64> {
        self.errors.iter().map(|level| level.iter().sum()).collect()
    }

    /// `sum(leaves) - sum(errors)`, which reproduces `total`.
    pub fn reconstructed(&self) -> f64 {
        let leaves: f64 = self.leaves.iter().sum();
        let errors: f64 = self.level_sums().iter().sum();
        leaves - errors
    }

    pub fn discrepancy(&self) -> f64 {
        self.total - self.reconstructed()
    }

    /// Allowed `|discrepancy|`: zero for integer observables,
    /// `K * 2^K * 1e-8 * n` for resistance.
    pub fn tolerance(&self) -> f64 {
        if self.kind.is_integral() {
            0.0
        } else {
            self.levels as f64 * (1u64 << self.levels) as f64 * 1e-8 * self.n as f64
        }
    }
}

pub fn dyadic_decompose(
    path: &WalkPath,
    kind: ObservableKind,
    levels: u32,
    cfg: &ResistanceSolveConfig,
) -> Result<DyadicDecomposition> {
    let mut ev = PathObservables::new(path, cfg)?;
    dyadic_decompose_with(&mut ev, kind, levels)
}

pub fn dyadic_decompose_with(
    ev: &mut PathObservables<'_>,
    kind: ObservableKind,
    levels: u32,
) -> Result<DyadicDecomposition> {
    let n = ev.path().len();
    if levels == 0 || levels >= usize::BITS || !n.is_multiple_of(1usize << levels) {
        return Err(Error::NotDyadic { n, levels });
    }
    // values[k][l] = X over block l of length n / 2^k
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(levels as usize + 1);
    for k in 0..=levels {
        let blocks = 1usize << k;
        let width = n / blocks;
        let row = (0..blocks).map(|l| ev.eval(l * width, (l + 1) * width, kind)).collect::<Result<_>>()?;
        values.push(row);
    }
    let errors = (0..levels as usize)
        .map(|k| {
            (0..1usize << k)
                .map(|l| values[k + 1][2 * l] + values[k + 1][2 * l + 1] - values[k][l])
                .collect()
        })
        .collect();
    Ok(DyadicDecomposition {
        kind,
        n,
        levels,
        total: values[0][0],
        leaves: values.pop().expect("at least two levels"),
        errors,
    })
}

/// `E_n = X[0,n] + X[n,2n] - X[0,2n]` on fresh walks of `2n` steps, one per
/// stream `0..samples`, in stream order.
pub fn cross_term_tail_samples(
    d: usize,
    n: usize,
    kind: ObservableKind,
    samples: usize,
    seed: u64,
    cfg: &ResistanceSolveConfig,
) -> Result<Vec<f64>> {
    cross_term_tail_range(d, n, kind, 0..samples as u64, seed, cfg)
}

/// Same as [`cross_term_tail_samples`] for an arbitrary stream range.
pub fn cross_term_tail_range(
    d: usize,
    n: usize,
    kind: ObservableKind,
    streams: std::ops::Range<u64>,
    seed: u64,
    cfg: &ResistanceSolveConfig,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyWalk);
    }
    if streams.is_empty() {
        return Err(Error::InsufficientData("need at least one sample".into()));
    }
    cfg.validate()?;
    map_streams(streams, |stream| {
        let path = simulate_walk(d, 2 * n, seed, stream)?;
        Ok(cross_term(&path, kind, n, 2 * n, cfg)?.value)
    })
}
