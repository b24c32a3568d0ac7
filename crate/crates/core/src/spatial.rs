//! Uniform-grid nearest-neighbour index over 3D points.
//!
//! Ties are broken by the lowest point index, so results match an
//! exhaustive scan exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Vec3;

/// Cap on cells per axis; keeps memory bounded for skewed clouds.
const MAX_DIM: usize = 512;

pub struct PointGrid<'a> {
    points: &'a [Vec3],
    min: Vec3,
    cell: f64,
    dims: [usize; 3],
    /// CSR layout: points of cell `c` are `items[starts[c]..starts[c + 1]]`.
    starts: Vec<u32>,
    items: Vec<u32>,
}

/// `(squared distance, index)` ordered lexicographically.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Cand(f64, u32);

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Cand {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

impl<'a> PointGrid<'a> {
    /// Points must be finite.
    pub fn build(points: &'a [Vec3]) -> Self {
        let (mut min, mut max) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        if points.is_empty() {
            min = Vec3::zeros();
            max = Vec3::zeros();
        }
        let ext = max - min;
        let big = ext.max();
        // Size cells for roughly one point per cell over the non-flat axes.
        let axes: Vec<f64> = ext.iter().copied().filter(|&e| e > big * 1e-6).collect();
        let cell = if axes.is_empty() {
            1.0
        } else {
            let measure: f64 = axes.iter().product();
            (measure / points.len() as f64).powf(1.0 / axes.len() as f64).max(big / MAX_DIM as f64)
        };
        let dims = [0, 1, 2].map(|a| ((ext[a] / cell).floor() as usize + 1).min(MAX_DIM));
        let mut grid = Self {
            points,
            min,
            cell,
            dims,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let n_cells = dims[0] * dims[1] * dims[2];
        let keys: Vec<usize> = points.iter().map(|p| grid.key(grid.coords(p))).collect();
        let mut counts = vec![0u32; n_cells + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        // Ascending index within each cell.
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn coords(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let c = ((p[a] - self.min[a]) / self.cell).floor();
            if c.is_nan() || c < 0.0 {
                0
            } else {
                (c as usize).min(self.dims[a] - 1)
            }
        })
    }

    fn key(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Visits every cell at Chebyshev distance exactly `r` from `c`.
    fn ring(&self, c: [usize; 3], r: usize, mut visit: impl FnMut(usize)) {
        let lo = |a: usize| c[a].saturating_sub(r);
        let hi = |a: usize| (c[a] + r).min(self.dims[a] - 1);
        for z in lo(2)..=hi(2) {
            for y in lo(1)..=hi(1) {
                let on_shell_zy = z.abs_diff(c[2]) == r || y.abs_diff(c[1]) == r;
                if on_shell_zy {
                    for x in lo(0)..=hi(0) {
                        visit(self.key([x, y, z]));
                    }
                } else {
                    // Only the two x-faces of the shell.
                    if c[0] >= r {
                        visit(self.key([c[0] - r, y, z]));
                    }
                    if r > 0 && c[0] + r < self.dims[0] {
                        visit(self.key([c[0] + r, y, z]));
                    }
                }
            }
        }
    }

    fn max_ring(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    /// Nearest point and its distance; lowest index on ties.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let c = self.coords(q);
        let mut best = Cand(f64::INFINITY, u32::MAX);
        for r in 0..=self.max_ring() {
            // Points in ring r are at least (r - 1) cells away.
            let bound = (r as f64 - 1.0).max(0.0) * self.cell;
            if best.0.is_finite() && bound * bound > best.0 {
                break;
            }
            self.ring(c, r, |k| {
                for &i in &self.items[self.starts[k] as usize..self.starts[k + 1] as usize] {
                    let cand = Cand((self.points[i as usize] - q).norm_squared(), i);
                    if cand < best {
                        best = cand;
                    }
                }
            });
        }
        Some((best.1 as usize, best.0.sqrt()))
    }

    /// The `k` nearest points in ascending (distance, index) order.
    pub fn k_nearest(&self, q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let c = self.coords(q);
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        for r in 0..=self.max_ring() {
            let bound = (r as f64 - 1.0).max(0.0) * self.cell;
            if heap.len() == k && bound * bound > heap.peek().expect("full").0 {
                break;
            }
            self.ring(c, r, |key| {
                for &i in &self.items[self.starts[key] as usize..self.starts[key + 1] as usize] {
                    let cand = Cand((self.points[i as usize] - q).norm_squared(), i);
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            });
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| (c.1 as usize, c.0.sqrt()))
            .collect()
    }
}

/// Exhaustive nearest neighbour with the same tie rule.
pub fn brute_nearest(points: &[Vec3], q: &Vec3) -> Option<(usize, f64)> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| Cand((p - q).norm_squared(), i as u32))
        .min()
        .map(|c| (c.1 as usize, c.0.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, flat: bool) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-1.0..3.0),
                    if flat { 0.5 } else { rng.random_range(0.0..0.1) },
                )
            })
            .collect()
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for flat in [false, true] {
            let pts = cloud(&mut rng, 500, flat);
            let g = PointGrid::build(&pts);
            for _ in 0..500 {
                let q = Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-3.0..5.0), rng.random_range(-1.0..1.0));
                assert_eq!(g.nearest(&q), brute_nearest(&pts, &q));
            }
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let pts = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        let g = PointGrid::build(&pts);
        assert_eq!(g.nearest(&Vec3::zeros()).unwrap().0, 0);
        assert_eq!(g.nearest(&Vec3::new(1.0, 0.0, 0.0)).unwrap().0, 0);
        let knn: Vec<usize> = g.k_nearest(&Vec3::zeros(), 3).iter().map(|x| x.0).collect();
        assert_eq!(knn, vec![0, 1, 2]);
    }

    #[test]
    fn knn_matches_sorted_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = cloud(&mut rng, 300, false);
        let g = PointGrid::build(&pts);
        for _ in 0..100 {
            let q = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..3.0), 0.05);
            let mut all: Vec<Cand> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| Cand((p - q).norm_squared(), i as u32))
                .collect();
            all.sort();
            let expect: Vec<usize> = all[..8].iter().map(|c| c.1 as usize).collect();
            let got: Vec<usize> = g.k_nearest(&q, 8).iter().map(|c| c.0).collect();
            assert_eq!(got, expect);
        }
        assert_eq!(g.k_nearest(&Vec3::zeros(), 1000).len(), 300);
    }

    #[test]
    fn degenerate_clouds() {
        let empty: Vec<Vec3> = Vec::new();
        assert!(PointGrid::build(&empty).nearest(&Vec3::zeros()).is_none());
        let same = vec![Vec3::new(1.0, 1.0, 1.0); 5];
        assert_eq!(PointGrid::build(&same).nearest(&Vec3::zeros()).unwrap().0, 0);
    }

    proptest! {
        #[test]
        fn grid_equals_scan_on_lattice_points(
            pts in proptest::collection::vec((-4i32..4, -4i32..4, -2i32..2), 1..60),
            q in (-5i32..5, -5i32..5, -3i32..3),
        ) {
            // Integer lattice points create many exact ties.
            let pts: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x as f64, y as f64, z as f64) * 0.5).collect();
            let q = Vec3::new(q.0 as f64, q.1 as f64, q.2 as f64) * 0.5;
            let g = PointGrid::build(&pts);
            prop_assert_eq!(g.nearest(&q), brute_nearest(&pts, &q));
        }
    }
}
