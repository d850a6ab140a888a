//! Monte Carlo laboratory for the range of a simple random walk on Z^d.
//!
//! Walks are generated per `(seed, stream)` key ([`lattice`]), turned into
//! trace graphs whose graph distance, cut-point count and effective
//! resistance are evaluated in [`observables`]. [`decomposition`] computes
//! the split defects `X[0,m] + X[m,t] - X[0,t]` and full dyadic
//! decompositions, [`capacity`] estimates Newtonian capacity of point sets,
//! and [`stats`] turns samples into tail, variance and normality diagnostics.

pub mod capacity;
pub mod decomposition;
pub mod error;
pub mod lattice;
pub mod mc;
pub mod observables;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{reverse_translate, simulate_walk, LatticePoint, SegmentView, WalkPath};
pub use observables::{observable, ObservableKind, PathObservables, RangeGraph, ResistanceSolveConfig};
