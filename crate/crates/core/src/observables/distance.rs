use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::graph::RangeGraph;

/// Breadth-first hop count between the endpoints of `g`.
pub fn graph_distance(g: &RangeGraph) -> u64 {
    let (s, t) = (g.source(), g.sink());
    if s == t {
        return 0;
    }
    let mut dist = vec![u32::MAX; g.vertex_count()];
    let mut queue = VecDeque::with_capacity(g.vertex_count());
    dist[s as usize] = 0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        let next = dist[v as usize] + 1;
        for &w in g.neighbors(v) {
            if dist[w as usize] == u32::MAX {
                if w == t {
                    return next as u64;
                }
                dist[w as usize] = next;
                queue.push_back(w);
            }
        }
    }
    unreachable!("range graphs are connected")
}

/// Unit-weight Dijkstra; reference implementation for [`graph_distance`].
pub fn graph_distance_dijkstra(g: &RangeGraph) -> u64 {
    let (s, t) = (g.source(), g.sink());
    let mut dist = vec![u64::MAX; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[s as usize] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((dv, v))) = heap.pop() {
        if dv > dist[v as usize] {
            continue;
        }
        if v == t {
            return dv;
        }
        for &w in g.neighbors(v) {
            let cand = dv + 1;
            if cand < dist[w as usize] {
                dist[w as usize] = cand;
                heap.push(Reverse((cand, w)));
            }
        }
    }
    unreachable!("range graphs are connected")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::simulate_walk;
    use crate::observables::graph::tests::path4;

    #[test]
    fn straight_path_distance() {
        let pts: Vec<[i64; 4]> = (0..=9).map(|i| [i, 0, 0, 0]).collect();
        let g = RangeGraph::build(path4(&pts).full()).unwrap();
        assert_eq!(graph_distance(&g), 9);
    }

    #[test]
    fn cycle_shortcut() {
        let p = path4(&[[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0]]);
        let g = RangeGraph::build(p.full()).unwrap();
        assert_eq!(graph_distance(&g), 0);
        let (s, t) = (g.vertex_of(&[0, 0, 0, 0]).unwrap(), g.vertex_of(&[0, 1, 0, 0]).unwrap());
        let g = g.with_terminals(s, t).unwrap();
        assert_eq!(graph_distance(&g), 1);
        assert_eq!(graph_distance_dijkstra(&g), 1);
        // Without the closing edge the walk itself is the only route.
        let g = RangeGraph::build(p.segment(0, 3).unwrap()).unwrap();
        assert_eq!(graph_distance(&g), 3);
    }

    #[test]
    fn agrees_with_dijkstra() {
        for d in 4..=8 {
            for s in 0..40 {
                let p = simulate_walk(d, 40 + 5 * s as usize, 2, s).unwrap();
                let g = RangeGraph::build(p.full()).unwrap();
                assert_eq!(graph_distance(&g), graph_distance_dijkstra(&g));
            }
        }
    }
}
