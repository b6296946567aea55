//! kd-tree k-nearest-neighbor search.
//!
//! The tree is immutable and rebuilt whenever the cloud moves; queries return
//! exactly what a brute-force scan would, including the smallest-index rule
//! on distance ties, so any caller may treat it as a fast drop-in for the
//! pairwise scan.

use crate::error::{Error, Result};
use crate::geometry::{dist_sq, PointCloud};

const LEAF_SIZE: usize = 8;

#[derive(Debug)]
enum Node {
    Leaf { start: u32, end: u32 },
    // left child is the node right after `self`; `right` is an arena index
    Inner { axis: u32, split: f64, right: u32 },
}

/// Spatial index over a snapshot of a point cloud.
#[derive(Debug)]
pub struct KdTree {
    dim: usize,
    data: Vec<f64>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

// (distance², original index) with the smallest-index rule on ties
#[inline]
fn better(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl KdTree {
    /// Builds a tree over all points of the cloud. Median split on the
    /// widest-spread coordinate, leaves of up to 8 points.
    pub fn build(cloud: &PointCloud) -> Self {
        Self::from_flat(cloud.dim(), cloud.as_flat().to_vec())
    }

    pub(crate) fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && !data.is_empty() && data.len().is_multiple_of(dim));
        let n = data.len() / dim;
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        build_rec(dim, &data, &mut order, &mut nodes, 0, n);
        Self {
            dim,
            data,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // built over a nonempty cloud
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn point(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// The `k` nearest source points to `y`, as `(index, squared distance)`
    /// in ascending order. Distance ties resolve to the smaller index. The
    /// query point itself is not treated specially; callers that need
    /// neighbors of a source point excluding itself ask for `k + 1` and drop
    /// the self entry.
    pub fn query(&self, y: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if y.len() != self.dim {
            return Err(Error::dim(format!(
                "query point has dimension {}, tree has {}",
                y.len(),
                self.dim
            )));
        }
        if y.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("query point has NaN coordinates"));
        }
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "k = {k} out of range 1..={n}"
            )));
        }
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.search(0, y, k, &mut best);
        Ok(best.into_iter().map(|(d, i)| (i as usize, d)).collect())
    }

    fn search(&self, node: usize, y: &[f64], k: usize, best: &mut Vec<(f64, u32)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    let cand = (dist_sq(y, self.point(i)), i);
                    if best.len() < k {
                        let pos = best.partition_point(|&b| better(b, cand));
                        best.insert(pos, cand);
                    } else if better(cand, *best.last().unwrap()) {
                        let pos = best.partition_point(|&b| better(b, cand));
                        best.insert(pos, cand);
                        best.pop();
                    }
                }
            }
            Node::Inner { axis, split, right } => {
                let diff = y[axis as usize] - split;
                let (near, far) = if diff < 0.0 {
                    (node + 1, right as usize)
                } else {
                    (right as usize, node + 1)
                };
                self.search(near, y, k, best);
                // an equal-distance point with a smaller index may sit exactly
                // on the splitting plane, so prune only on strict excess
                if best.len() < k || diff * diff <= best.last().unwrap().0 {
                    self.search(far, y, k, best);
                }
            }
        }
    }
}

fn build_rec(
    dim: usize,
    data: &[f64],
    order: &mut [u32],
    nodes: &mut Vec<Node>,
    start: usize,
    end: usize,
) {
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: start as u32,
            end: end as u32,
        });
        return;
    }
    let mut best_axis = 0;
    let mut best_spread = f64::NEG_INFINITY;
    for a in 0..dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &order[start..end] {
            let v = data[i as usize * dim + a];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_axis = a;
        }
    }
    let mid = (start + end) / 2;
    let coord = |i: u32| data[i as usize * dim + best_axis];
    order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
        coord(i)
            .partial_cmp(&coord(j))
            .expect("finite coordinates")
            .then(i.cmp(&j))
    });
    let split = coord(order[mid]);
    let id = nodes.len();
    nodes.push(Node::Inner {
        axis: best_axis as u32,
        split,
        right: 0,
    });
    build_rec(dim, data, order, nodes, start, mid);
    let right = nodes.len() as u32;
    build_rec(dim, data, order, nodes, mid, end);
    if let Node::Inner { right: r, .. } = &mut nodes[id] {
        *r = right;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(dim: usize, data: &[f64]) -> PointCloud {
        PointCloud::new(dim, data.to_vec()).unwrap()
    }

    // independent reference: full scan with the same tie-break
    fn brute(dim: usize, data: &[f64], y: &[f64], k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = data
            .chunks_exact(dim)
            .enumerate()
            .map(|(i, p)| (dist_sq(y, p), i))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter().map(|(d, i)| (i, d)).collect()
    }

    #[test]
    fn singleton() {
        let t = KdTree::build(&cloud(1, &[0.0]));
        assert_eq!(t.query(&[0.0], 1).unwrap(), vec![(0, 0.0)]);
    }

    #[test]
    fn nearest_of_three() {
        let t = KdTree::build(&cloud(1, &[0.0, 1.0, 2.0]));
        assert_eq!(t.query(&[0.9], 1).unwrap()[0].0, 1);
    }

    #[test]
    fn tie_breaks_to_smaller_index() {
        let t = KdTree::build(&cloud(2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]));
        let got = t.query(&[0.0, 0.0], 2).unwrap();
        assert_eq!(got, vec![(0, 0.0), (1, 1.0)]);
    }

    #[test]
    fn k_equals_n_is_a_total_order() {
        let data = [3.0, -1.0, 2.0, 2.0, 0.5, 0.5, -4.0, 1.0];
        let t = KdTree::build(&cloud(2, &data));
        let got = t.query(&[0.1, 0.2], 4).unwrap();
        assert_eq!(got, brute(2, &data, &[0.1, 0.2], 4));
        assert!(got.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn source_point_query_hits_itself_first() {
        let data = [0.3, 0.7, -1.2, 0.0, 0.4, 0.9];
        let t = KdTree::build(&cloud(2, &data));
        let got = t.query(&[-1.2, 0.0], 1).unwrap();
        assert_eq!(got, vec![(1, 0.0)]);
    }

    #[test]
    fn k_out_of_range() {
        let t = KdTree::build(&cloud(1, &[0.0, 1.0]));
        assert!(t.query(&[0.0], 0).is_err());
        assert!(t.query(&[0.0], 3).is_err());
        assert!(t.query(&[0.0, 0.0], 1).is_err());
    }

    #[test]
    fn matches_brute_force_including_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &dim in &[1usize, 2, 3] {
            for trial in 0..60 {
                let n = rng.gen_range(1..80);
                let mut data: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
                if trial % 3 == 0 && n > 2 {
                    // force exact duplicates
                    for c in 0..dim {
                        data[c] = data[dim + c];
                    }
                }
                let t = KdTree::from_flat(dim, data.clone());
                for _ in 0..12 {
                    let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-6.0..6.0)).collect();
                    let k = rng.gen_range(1..=n);
                    assert_eq!(t.query(&y, k).unwrap(), brute(dim, &data, &y, k));
                }
            }
        }
    }
}
