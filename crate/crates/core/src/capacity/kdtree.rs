/// Static kd-tree over lattice points for nearest-distance queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    d: usize,
    /// Points in tree order; node `mid` of range `[lo, hi)` splits on `axis[mid]`.
    coords: Vec<i64>,
    axis: Vec<u8>,
}

impl KdTree {
    /// Build from a flat coordinate buffer with `d` coordinates per point.
    pub fn new(d: usize, points: &[i64]) -> Self {
        let count = points.len() / d;
        let mut order: Vec<usize> = (0..count).collect();
        let mut axis = vec![0u8; count];
        build(d, points, &mut order, &mut axis);
        let mut coords = Vec::with_capacity(points.len());
        for &i in &order {
            coords.extend_from_slice(&points[i * d..(i + 1) * d]);
        }
        Self { d, coords, axis }
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Squared Euclidean distance from `q` to the nearest stored point.
    pub fn nearest_sq(&self, q: &[i64]) -> i64 {
        let mut best = i64::MAX;
        self.search(q, 0, self.len(), 1.0, &mut best);
        best
    }

    /// Euclidean distance to some stored point within a factor `1 + eps`
    /// of the nearest one. Dividing by `1 + eps` gives a lower bound on the
    /// nearest distance.
    pub fn approx_nearest(&self, q: &[i64], eps: f64) -> f64 {
        let mut best = i64::MAX;
        self.search(q, 0, self.len(), (1.0 + eps) * (1.0 + eps), &mut best);
        (best as f64).sqrt()
    }

    fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    fn search(&self, q: &[i64], lo: usize, hi: usize, slack: f64, best: &mut i64) {
        let mut off = [0i64; 8];
        self.descend(q, lo, hi, slack, &mut off, 0, best);
    }

    /// `off[ax]` is the offset from `q` to the current cell along `ax`, and
    /// `rd` the squared distance from `q` to the cell.
    #[allow(clippy::too_many_arguments)]
    fn descend(&self, q: &[i64], lo: usize, hi: usize, slack: f64, off: &mut [i64; 8], rd: i64, best: &mut i64) {
        if hi - lo <= LEAF_SIZE {
            for i in lo..hi {
                let dist = sq_dist(self.point(i), q);
                if dist < *best {
                    *best = dist;
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.point(mid);
        let dist = sq_dist(p, q);
        if dist < *best {
            *best = dist;
        }
        let ax = self.axis[mid] as usize;
        let delta = q[ax] - p[ax];
        let (near, far) = if delta < 0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.descend(q, near.0, near.1, slack, off, rd, best);
        let old = off[ax];
        let far_rd = rd - old * old + delta * delta;
        if (far_rd as f64) * slack < *best as f64 {
            off[ax] = delta;
            self.descend(q, far.0, far.1, slack, off, far_rd, best);
            off[ax] = old;
        }
    }
}

const LEAF_SIZE: usize = 12;

#[inline]
fn sq_dist(p: &[i64], q: &[i64]) -> i64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn build(d: usize, points: &[i64], order: &mut [usize], axis: &mut [u8]) {
    if order.is_empty() {
        return;
    }
    // split on the axis of largest spread
    let mut best_axis = 0;
    let mut best_spread = -1;
    for ax in 0..d {
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        for &i in order.iter() {
            let c = points[i * d + ax];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_axis = ax;
        }
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by_key(mid, |&i| points[i * d + best_axis]);
    axis[mid] = best_axis as u8;
    let (left, rest) = order.split_at_mut(mid);
    let (left_axis, rest_axis) = axis.split_at_mut(mid);
    build(d, points, left, left_axis);
    build(d, points, &mut rest[1..], &mut rest_axis[1..]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for d in [4, 6, 8] {
            let pts: Vec<i64> = (0..300 * d).map(|_| rng.random_range(-20..20)).collect();
            let tree = KdTree::new(d, &pts);
            for _ in 0..200 {
                let q: Vec<i64> = (0..d).map(|_| rng.random_range(-40..40)).collect();
                let brute = pts
                    .chunks_exact(d)
                    .map(|p| p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<i64>())
                    .min()
                    .unwrap();
                assert_eq!(tree.nearest_sq(&q), brute);
            }
        }
    }

    #[test]
    fn approximate_search_bounds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let d = 4;
        let pts: Vec<i64> = (0..2000 * d).map(|_| rng.random_range(-60..60)).collect();
        let tree = KdTree::new(d, &pts);
        for _ in 0..300 {
            let q: Vec<i64> = (0..d).map(|_| rng.random_range(-90..90)).collect();
            let exact = (tree.nearest_sq(&q) as f64).sqrt();
            let approx = tree.approx_nearest(&q, 1.0);
            assert!(approx >= exact - 1e-9);
            assert!(approx <= 2.0 * exact + 1e-9);
        }
    }

    #[test]
    fn single_point() {
        let tree = KdTree::new(4, &[1, 2, 3, 4]);
        assert_eq!(tree.nearest_sq(&[1, 2, 3, 4]), 0);
        assert_eq!(tree.nearest_sq(&[0, 2, 3, 6]), 5);
    }
}
