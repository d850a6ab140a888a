//! Simple random walks on Z^d and views onto their time segments.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const MIN_DIM: usize = 4;
pub const MAX_DIM: usize = 8;

pub fn check_dim(d: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}

/// A site of Z^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        check_dim(coords.len())?;
        Ok(Self(coords))
    }

    pub fn origin(d: usize) -> Result<Self> {
        Self::new(vec![0; d])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }
}

impl From<&[i64]> for LatticePoint {
    fn from(coords: &[i64]) -> Self {
        Self(coords.to_vec())
    }
}

/// A realized trajectory `S_0, ..., S_n` stored as a flat coordinate array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    d: usize,
    coords: Vec<i64>,
    seed: u64,
    stream: u64,
}

impl WalkPath {
    /// Wrap explicit positions (row-major, `d` coordinates per time),
    /// checking the origin start and the unit-step property.
    pub fn from_coords(d: usize, coords: Vec<i64>, seed: u64, stream: u64) -> Result<Self> {
        check_dim(d)?;
        if !coords.len().is_multiple_of(d) || coords.len() < 2 * d {
            return Err(Error::InvalidPath(format!(
                "{} coordinates do not form at least two points in dimension {d}",
                coords.len()
            )));
        }
        let path = Self { d, coords, seed, stream };
        if path.point(0).iter().any(|&c| c != 0) {
            return Err(Error::InvalidPath("path does not start at the origin".into()));
        }
        if let Some(m) = path.first_bad_step() {
            return Err(Error::InvalidPath(format!("step {m} -> {} is not a unit step", m + 1)));
        }
        Ok(path)
    }

    pub fn from_points(points: &[LatticePoint], seed: u64, stream: u64) -> Result<Self> {
        let d = points.first().map(LatticePoint::dim).ok_or(Error::EmptyWalk)?;
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::InvalidPath("points of mixed dimension".into()));
        }
        let coords = points.iter().flat_map(|p| p.0.iter().copied()).collect();
        Self::from_coords(d, coords, seed, stream)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of steps `n`; the path holds `n + 1` positions.
    pub fn len(&self) -> usize {
        self.coords.len() / self.d - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    /// Position `S_m`.
    pub fn point(&self, m: usize) -> &[i64] {
        &self.coords[m * self.d..(m + 1) * self.d]
    }

    pub fn lattice_point(&self, m: usize) -> LatticePoint {
        LatticePoint(self.point(m).to_vec())
    }

    pub fn points(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    /// First `m` such that `|S_{m+1} - S_m|_1 != 1`, if any.
    pub fn first_bad_step(&self) -> Option<usize> {
        (0..self.len()).find(|&m| {
            let l1: i64 = self
                .point(m)
                .iter()
                .zip(self.point(m + 1))
                .map(|(x, y)| (x - y).abs())
                .sum();
            l1 != 1
        })
    }

    pub fn segment(&self, a: usize, b: usize) -> Result<SegmentView<'_>> {
        SegmentView::new(self, a, b)
    }

    pub fn full(&self) -> SegmentView<'_> {
        SegmentView { path: self, a: 0, b: self.len() }
    }

    /// Little-endian dump: `d: u32, n: u64, seed: u64, stream: u64`, then
    /// `(n + 1) * d` coordinates as `i64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.d as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.stream.to_le_bytes())?;
        for c in &self.coords {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        check_dim(d)?;
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let stream = u64::from_le_bytes(b8);
        let mut coords = Vec::with_capacity((n + 1) * d);
        for _ in 0..(n + 1) * d {
            r.read_exact(&mut b8)?;
            coords.push(i64::from_le_bytes(b8));
        }
        Self::from_coords(d, coords, seed, stream)
    }
}

/// The time window `[a, b]` of a path.
#[derive(Debug, Clone, Copy)]
pub struct SegmentView<'a> {
    path: &'a WalkPath,
    a: usize,
    b: usize,
}

impl<'a> SegmentView<'a> {
    pub fn new(path: &'a WalkPath, a: usize, b: usize) -> Result<Self> {
        if a > b || b > path.len() {
            return Err(Error::Segment { a, b, n: path.len() });
        }
        Ok(Self { path, a, b })
    }

    pub fn path(&self) -> &'a WalkPath {
        self.path
    }

    pub fn start(&self) -> usize {
        self.a
    }

    pub fn end(&self) -> usize {
        self.b
    }

    pub fn steps(&self) -> usize {
        self.b - self.a
    }

    pub fn points(&self) -> impl Iterator<Item = &'a [i64]> + 'a {
        let d = self.path.d;
        self.path.coords[self.a * d..(self.b + 1) * d].chunks_exact(d)
    }

    pub fn endpoints_coincide(&self) -> bool {
        self.path.point(self.a) == self.path.point(self.b)
    }
}

/// Draw `n` steps of the simple random walk on Z^d, keyed by `(seed, stream)`.
pub fn simulate_walk(d: usize, n: usize, seed: u64, stream: u64) -> Result<WalkPath> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::EmptyWalk);
    }
    let mut rng = stream_rng(seed, stream);
    let mut coords = vec![0i64; (n + 1) * d];
    let directions = 2 * d as u32;
    for m in 0..n {
        let (prev, next) = coords[m * d..(m + 2) * d].split_at_mut(d);
        next.copy_from_slice(prev);
        let r = rng.random_range(0..directions) as usize;
        next[r >> 1] += if r & 1 == 0 { 1 } else { -1 };
    }
    Ok(WalkPath { d, coords, seed, stream })
}

/// Time-reverse a segment and move its last point to the origin:
/// `S'_i = S_{b-i} - S_b` for `0 <= i <= b - a`.
pub fn reverse_translate(view: SegmentView<'_>) -> Result<WalkPath> {
    if view.steps() == 0 {
        return Err(Error::EmptySegment(view.a));
    }
    let path = view.path;
    let d = path.d;
    let anchor = path.point(view.b);
    let mut coords = Vec::with_capacity((view.steps() + 1) * d);
    for m in (view.a..=view.b).rev() {
        coords.extend(path.point(m).iter().zip(anchor).map(|(x, o)| x - o));
    }
    Ok(WalkPath { d, coords, seed: path.seed, stream: path.stream })
}
