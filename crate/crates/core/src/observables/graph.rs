use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{SegmentView, MAX_DIM};

use super::trace::{PointTable, Relabel, Trace};

const MAX_DEGREE: usize = 2 * MAX_DIM;

/// The trace graph of a segment: distinct visited sites joined by the
/// distinct undirected edges `{S_m, S_{m+1}}`, unit conductance each.
#[derive(Debug, Clone)]
pub struct RangeGraph {
    d: usize,
    coords: Vec<i64>,
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    source: u32,
    sink: u32,
    edge_count: usize,
}

/// Reusable buffers for building many graphs from one [`Trace`].
#[derive(Debug, Default)]
pub struct GraphScratch {
    relabel: Relabel,
    local: Vec<u32>,
    slots: Vec<[u32; MAX_DEGREE]>,
    degree: Vec<u8>,
}

impl RangeGraph {
    /// Hash the points of `view` and build its graph.
    pub fn build(view: SegmentView<'_>) -> Result<Self> {
        if view.steps() == 0 {
            return Err(Error::EmptySegment(view.start()));
        }
        let trace = Trace::of_segment(view);
        let mut scratch = GraphScratch::default();
        Self::from_trace(&trace, 0, view.steps(), &mut scratch)
    }

    /// Graph of trace times `[a, b]` (relative to the start of the trace).
    pub fn from_trace(trace: &Trace, a: usize, b: usize, scratch: &mut GraphScratch) -> Result<Self> {
        if a >= b || b >= trace.ids().len() {
            return Err(if a == b { Error::EmptySegment(a) } else { Error::Segment { a, b, n: trace.ids().len() - 1 } });
        }
        let GraphScratch { relabel, local, slots, degree } = scratch;
        let count = relabel.apply(&trace.ids()[a..=b], trace.vertex_count(), local);
        let points: &PointTable = trace.points();
        let d = points.dim();
        let mut coords = vec![0; count * d];
        for (t, &v) in local.iter().enumerate() {
            let g = trace.ids()[a + t];
            coords[v as usize * d..(v as usize + 1) * d].copy_from_slice(points.point(g));
        }
        Ok(Self::assemble(d, coords, local, slots, degree))
    }

    fn assemble(
        d: usize,
        coords: Vec<i64>,
        local: &[u32],
        slots: &mut Vec<[u32; MAX_DEGREE]>,
        degree: &mut Vec<u8>,
    ) -> Self {
        let count = coords.len() / d;
        slots.clear();
        slots.resize(count, [0; MAX_DEGREE]);
        degree.clear();
        degree.resize(count, 0);
        let mut edge_count = 0;
        for w in local.windows(2) {
            let (u, v) = (w[0] as usize, w[1] as usize);
            let du = degree[u] as usize;
            if slots[u][..du].contains(&(v as u32)) {
                continue;
            }
            slots[u][du] = v as u32;
            degree[u] += 1;
            let dv = degree[v] as usize;
            slots[v][dv] = u as u32;
            degree[v] += 1;
            edge_count += 1;
        }
        let mut offsets = Vec::with_capacity(count + 1);
        let mut neighbors = Vec::with_capacity(2 * edge_count);
        offsets.push(0);
        for (s, &deg) in slots.iter_mut().zip(degree.iter()) {
            let nb = &mut s[..deg as usize];
            nb.sort_unstable();
            neighbors.extend_from_slice(nb);
            offsets.push(neighbors.len() as u32);
        }
        Self {
            d,
            coords,
            offsets,
            neighbors,
            source: local[0],
            sink: *local.last().expect("segment has points"),
            edge_count,
        }
    }

    /// Same graph with different terminals.
    pub fn with_terminals(mut self, source: u32, sink: u32) -> Result<Self> {
        let n = self.vertex_count() as u32;
        if source >= n || sink >= n {
            return Err(Error::InvalidParameter(format!("terminal outside 0..{n}")));
        }
        self.source = source;
        self.sink = sink;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Vertex of `S_a`.
    pub fn source(&self) -> u32 {
        self.source
    }

    /// Vertex of `S_b`.
    pub fn sink(&self) -> u32 {
        self.sink
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    pub fn position(&self, v: u32) -> &[i64] {
        &self.coords[v as usize * self.d..(v as usize + 1) * self.d]
    }

    /// Linear scan; intended for tests and debugging.
    pub fn vertex_of(&self, p: &[i64]) -> Option<u32> {
        self.coords.chunks_exact(self.d).position(|x| x == p).map(|v| v as u32)
    }

    /// Undirected edges with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.vertex_count() as u32)
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// One `u v` pair per line.
    pub fn edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 10);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lattice::{simulate_walk, WalkPath};

    /// Path through the given points in dimension 4 (origin first).
    pub(crate) fn path4(points: &[[i64; 4]]) -> WalkPath {
        let coords = points.iter().flatten().copied().collect();
        WalkPath::from_coords(4, coords, 0, 0).unwrap()
    }

    fn union_find_components(g: &RangeGraph) -> usize {
        let n = g.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (u, v) in g.edges() {
            let (ru, rv) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
            parent[ru] = rv;
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }

    #[test]
    fn straight_path() {
        let p = path4(&[[0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0]]);
        let g = RangeGraph::build(p.full()).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 2));
        assert_eq!(g.position(g.sink()), &[2, 0, 0, 0]);
        assert_eq!(g.edge_list(), "0 1\n1 2\n");
    }

    #[test]
    fn back_and_forth_dedupes() {
        let p = path4(&[[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]]);
        let g = RangeGraph::build(p.full()).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (2, 1));
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn empty_segment_rejected() {
        let p = path4(&[[0, 0, 0, 0], [1, 0, 0, 0]]);
        assert!(matches!(RangeGraph::build(p.segment(1, 1).unwrap()), Err(Error::EmptySegment(1))));
    }

    #[test]
    fn random_graphs_are_connected_and_bounded() {
        for d in 4..=8 {
            for s in 0..40 {
                let p = simulate_walk(d, 64, 9, s).unwrap();
                let g = RangeGraph::build(p.full()).unwrap();
                assert!(g.edge_count() <= 64);
                assert!(g.vertex_count() <= 65);
                assert_eq!(union_find_components(&g), 1);
                for v in 0..g.vertex_count() as u32 {
                    for &w in g.neighbors(v) {
                        assert_ne!(v, w);
                        assert!(g.neighbors(w).contains(&v));
                    }
                    assert!(g.neighbors(v).windows(2).all(|x| x[0] < x[1]));
                }
                assert_eq!(g.vertex_of(p.point(0)), Some(g.source()));
                assert_eq!(g.vertex_of(p.point(64)), Some(g.sink()));
            }
        }
    }

    #[test]
    fn trace_build_matches_hashed_build() {
        let p = simulate_walk(5, 500, 4, 1).unwrap();
        let trace = Trace::new(&p);
        let mut scratch = GraphScratch::default();
        for (a, b) in [(0, 500), (17, 230), (250, 251), (100, 499)] {
            let g1 = RangeGraph::build(p.segment(a, b).unwrap()).unwrap();
            let g2 = RangeGraph::from_trace(&trace, a, b, &mut scratch).unwrap();
            assert_eq!(g1.edge_list(), g2.edge_list());
            assert_eq!(g1.coords, g2.coords);
            assert_eq!((g1.source, g1.sink), (g2.source, g2.sink));
        }
    }
}
