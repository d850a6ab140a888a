//! Cut times of a segment `[a, b]`: times `i` in `(a, b]` with
//! `S[a, i-1]` and `S[i, b]` disjoint.

use std::collections::HashSet;

use crate::lattice::SegmentView;

use super::trace::{Relabel, Trace};

/// Reusable buffers for [`cut_points_in`].
#[derive(Debug, Default)]
pub struct CutScratch {
    relabel: Relabel,
    local: Vec<u32>,
    first: Vec<u32>,
    last: Vec<u32>,
    cover: Vec<i32>,
}

/// Sweep over first/last visits. Time `i` fails to be a cut time exactly
/// when some site has first visit `f < i <= l` last visit, so the cut times
/// are the complement of the union of the intervals `(f, l]`.
pub fn cut_point_count(view: SegmentView<'_>) -> u64 {
    if view.steps() == 0 {
        return 0;
    }
    let trace = Trace::of_segment(view);
    cut_points_in(&trace, 0, view.steps(), &mut CutScratch::default())
}

/// Cut-time count for trace times `[a, b]` (relative to the trace start).
pub fn cut_points_in(trace: &Trace, a: usize, b: usize, scratch: &mut CutScratch) -> u64 {
    let len = b - a;
    if len == 0 {
        return 0;
    }
    let CutScratch { relabel, local, first, last, cover } = scratch;
    let count = relabel.apply(&trace.ids()[a..=b], trace.vertex_count(), local);
    first.clear();
    first.resize(count, u32::MAX);
    last.clear();
    last.resize(count, 0);
    for (t, &v) in local.iter().enumerate() {
        let v = v as usize;
        if first[v] == u32::MAX {
            first[v] = t as u32;
        }
        last[v] = t as u32;
    }
    cover.clear();
    cover.resize(len + 2, 0);
    for (&f, &l) in first.iter().zip(last.iter()) {
        if f < l {
            cover[f as usize + 1] += 1;
            cover[l as usize + 1] -= 1;
        }
    }
    let mut depth = 0;
    let mut cuts = 0;
    for &c in &cover[1..=len] {
        depth += c;
        if depth == 0 {
            cuts += 1;
        }
    }
    cuts
}

/// Direct evaluation of the indicator sum: for each `i`, grow the set
/// `S[a, i-1]` and test every point of `S[i, b]` against it. Quadratic;
/// reference implementation for [`cut_point_count`].
pub fn cut_point_count_naive(view: SegmentView<'_>) -> u64 {
    let pts: Vec<&[i64]> = view.points().collect();
    let mut past: HashSet<&[i64]> = HashSet::with_capacity(pts.len());
    let mut cuts = 0;
    for i in 1..pts.len() {
        past.insert(pts[i - 1]);
        if pts[i..].iter().all(|p| !past.contains(p)) {
            cuts += 1;
        }
    }
    cuts
}
