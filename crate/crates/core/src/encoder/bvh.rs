//! Bounding-volume hierarchy over triangle faces for nearest-surface queries.

use crate::geometry::Vec3;

use super::closest::closest_point_on_triangle;
use super::{FitResult, TIE_EPS};
use crate::mesh::BaryCoord;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn dist2(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = (self.min[k] - p[k]).max(0.0).max(p[k] - self.max[k]);
            d += e * e;
        }
        d
    }
}

#[derive(Clone, Debug)]
enum Node {
    Inner { bounds: Aabb, left: u32, right: u32 },
    Leaf { bounds: Aabb, start: u32, end: u32 },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Inner { bounds, .. } | Node::Leaf { bounds, .. } => bounds,
        }
    }
}

/// BVH over a set of union-mesh faces frozen at one time step.
#[derive(Clone, Debug)]
pub struct FaceAccel {
    nodes: Vec<Node>,
    /// Leaf order; `faces[i]` is a global face index.
    faces: Vec<u32>,
    tris: Vec<[Vec3; 3]>,
}

impl FaceAccel {
    /// `faces` pairs each global face index with its corner positions.
    pub fn build(faces: Vec<(u32, [Vec3; 3])>) -> Self {
        let (mut ids, mut tris): (Vec<u32>, Vec<[Vec3; 3]>) = faces.into_iter().unzip();
        let mut nodes = Vec::new();
        if !ids.is_empty() {
            let mut order: Vec<usize> = (0..ids.len()).collect();
            let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
            let n = order.len();
            build_node(&mut nodes, &mut order, 0, n, &tris, &centroids);
            ids = order.iter().map(|&i| ids[i]).collect();
            tris = order.iter().map(|&i| tris[i]).collect();
        }
        Self {
            nodes,
            faces: ids,
            tris,
        }
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Nearest face to `q` under the lowest-index tie rule; `None` when empty.
    pub fn nearest(&self, q: &Vec3) -> Option<FitResult> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        // (face, residual, weights) within TIE_EPS of the running best.
        let mut cands: Vec<(u32, f64, [f64; 3])> = Vec::new();
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let bound = best + TIE_EPS;
            if node.bounds().dist2(q) > bound * bound {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for i in *start as usize..*end as usize {
                        let (alpha, p) = closest_point_on_triangle(q, &self.tris[i]);
                        let r = (q - p).norm();
                        if r <= best + TIE_EPS {
                            if r < best {
                                best = r;
                                cands.retain(|c| c.1 <= best + TIE_EPS);
                            }
                            cands.push((self.faces[i], r, alpha));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left as usize].bounds().dist2(q);
                    let dr = self.nodes[*right as usize].bounds().dist2(q);
                    // Visit the closer child first.
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        select(cands.into_iter(), best)
    }

    /// Checks that every face sits in exactly one leaf whose box contains it.
    #[allow(clippy::needless_range_loop)]
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = vec![0usize; self.faces.len()];
        for node in &self.nodes {
            if let Node::Leaf { bounds, start, end } = node {
                for i in *start as usize..*end as usize {
                    seen[i] += 1;
                    if !self.tris[i].iter().all(|p| bounds.contains(p)) {
                        return Err(format!("face {} escapes its leaf box", self.faces[i]));
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(format!("face {} appears in {} leaves", self.faces[i], seen[i]));
        }
        Ok(())
    }
}

/// Lowest face index among candidates within `TIE_EPS` of the minimum.
pub(super) fn select(
    cands: impl Iterator<Item = (u32, f64, [f64; 3])>,
    best: f64,
) -> Option<FitResult> {
    cands
        .filter(|c| c.1 <= best + TIE_EPS)
        .min_by_key(|c| c.0)
        .map(|(face, residual, alpha)| FitResult {
            bary: BaryCoord { face, alpha },
            residual,
        })
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
) -> u32 {
    let mut bounds = Aabb::empty();
    for &i in &order[start..end] {
        for p in &tris[i] {
            bounds.grow(p);
        }
    }
    let idx = nodes.len() as u32;
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            start: start as u32,
            end: end as u32,
        });
        return idx;
    }
    let mut cb = Aabb::empty();
    for &i in &order[start..end] {
        cb.grow(&centroids[i]);
    }
    let ext = cb.max - cb.min;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (start + end) / 2;
    order[start..end].sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    // Placeholder, patched once both children exist.
    nodes.push(Node::Leaf {
        bounds,
        start: 0,
        end: 0,
    });
    let left = build_node(nodes, order, start, mid, tris, centroids);
    let right = build_node(nodes, order, mid, end, tris, centroids);
    let merged = nodes[left as usize]
        .bounds()
        .merge(nodes[right as usize].bounds());
    nodes[idx as usize] = Node::Inner {
        bounds: merged,
        left,
        right,
    };
    idx
}
