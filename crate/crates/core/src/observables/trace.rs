//! Interning of lattice points into dense vertex ids.

use std::hash::Hasher;

use hashbrown::HashTable;
use rustc_hash::FxHasher;

use crate::lattice::{SegmentView, WalkPath};

fn hash_coords(coords: &[i64]) -> u64 {
    let mut h = FxHasher::default();
    for &c in coords {
        h.write_i64(c);
    }
    h.finish()
}

/// Open-addressing map from points to dense ids `0..len`. Points are kept
/// in a flat coordinate buffer; the table only stores ids.
#[derive(Debug, Clone)]
pub struct PointTable {
    d: usize,
    table: HashTable<u32>,
    coords: Vec<i64>,
}

impl PointTable {
    pub fn with_capacity(d: usize, capacity: usize) -> Self {
        Self { d, table: HashTable::with_capacity(capacity), coords: Vec::with_capacity(capacity * d) }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, id: u32) -> &[i64] {
        let i = id as usize * self.d;
        &self.coords[i..i + self.d]
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.coords
    }

    pub fn get(&self, p: &[i64]) -> Option<u32> {
        let d = self.d;
        let coords = &self.coords;
        self.table
            .find(hash_coords(p), |&id| &coords[id as usize * d..(id as usize + 1) * d] == p)
            .copied()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.get(p).is_some()
    }

    /// Id of `p`, inserting it if new.
    pub fn intern(&mut self, p: &[i64]) -> u32 {
        let d = self.d;
        let hash = hash_coords(p);
        let coords = &self.coords;
        let next = (coords.len() / d) as u32;
        let entry = self.table.entry(
            hash,
            |&id| &coords[id as usize * d..(id as usize + 1) * d] == p,
            |&id| hash_coords(&coords[id as usize * d..(id as usize + 1) * d]),
        );
        match entry {
            hashbrown::hash_table::Entry::Occupied(e) => *e.get(),
            hashbrown::hash_table::Entry::Vacant(e) => {
                e.insert(next);
                self.coords.extend_from_slice(p);
                next
            }
        }
    }
}

/// Vertex id of every time index of a path, so that segment observables can
/// be evaluated without rehashing coordinates.
#[derive(Debug, Clone)]
pub struct Trace {
    ids: Vec<u32>,
    points: PointTable,
}

impl Trace {
    pub fn new(path: &WalkPath) -> Self {
        Self::of_segment(path.full())
    }

    /// Trace of a segment; time `a + i` maps to `ids()[i]`.
    pub fn of_segment(view: SegmentView<'_>) -> Self {
        let d = view.path().dim();
        let mut points = PointTable::with_capacity(d, view.steps() + 1);
        let ids = view.points().map(|p| points.intern(p)).collect();
        Self { ids, points }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &PointTable {
        &self.points
    }
}

/// Relabels a window of global ids to local ids `0..k` in order of first
/// appearance, reusing its buffer across calls.
#[derive(Debug, Default)]
pub struct Relabel {
    local: Vec<u32>,
    touched: Vec<u32>,
}

impl Relabel {
    pub const NONE: u32 = u32::MAX;

    /// Map `window` into `out`; returns the number of distinct ids.
    /// `universe` bounds the global ids.
    pub fn apply(&mut self, window: &[u32], universe: usize, out: &mut Vec<u32>) -> usize {
        if self.local.len() < universe {
            self.local.resize(universe, Self::NONE);
        }
        out.clear();
        let mut next = 0u32;
        for &g in window {
            let slot = &mut self.local[g as usize];
            if *slot == Self::NONE {
                *slot = next;
                self.touched.push(g);
                next += 1;
            }
            out.push(*slot);
        }
        for g in self.touched.drain(..) {
            self.local[g as usize] = Self::NONE;
        }
        next as usize
    }
}
