//! Z-buffered triangle rasterization at pixel centres, with exact ray hits.
//!
//! Coverage uses screen-space edge functions after near-plane clipping; the
//! depth and barycentrics of a covered pixel come from intersecting its ray
//! with the unclipped camera-space triangle in f64.

use nalgebra::Vector2;

use super::SimError;
use crate::codec::{BaryMap, PixelRecord, SegMap};
use crate::geometry::{CameraParams, DepthMap, Vec3};
use crate::mesh::{BaryCoord, SceneMesh};

/// Near clipping distance along the optical axis.
pub const NEAR: f64 = 1e-3;

/// Ray hits whose barycentrics are this far outside the simplex are dropped
/// as coverage/intersection disagreements.
const INSIDE_TOL: f64 = 1e-6;

type P2 = Vector2<f64>;

#[derive(Clone, Debug)]
pub struct Raster {
    /// Exact hit depth; invalid where no surface was hit.
    pub depth: DepthMap,
    /// Object id of the visible surface; 0 for static geometry and background.
    pub seg: SegMap,
    /// Global face and weights of the visible surface.
    pub hits: Vec<Option<BaryCoord>>,
    /// Whether the visible surface belongs to a dynamic mesh.
    pub dynamic: Vec<bool>,
}

impl Raster {
    fn empty(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self {
            depth: DepthMap::filled(width, height, 0.0),
            seg: SegMap::background(width, height),
            hits: vec![None; n],
            dynamic: vec![false; n],
        }
    }

    /// Ground-truth barycentric map: quantized hits on dynamic surfaces,
    /// `Static` on static ones.
    pub fn bary_map(&self) -> BaryMap {
        let mut map = BaryMap::invalid(self.depth.width, self.depth.height);
        for (i, hit) in self.hits.iter().enumerate() {
            map.records[i] = match hit {
                None => PixelRecord::INVALID,
                Some(bc) if self.dynamic[i] => PixelRecord::dynamic(bc),
                Some(_) => PixelRecord::STATIC,
            };
        }
        map
    }
}

/// Signed doubled area of `(a, b, p)`.
#[inline]
fn edge(a: &P2, b: &P2, p: &P2) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Calls `visit(u, v)` for every pixel whose centre lies in the closed
/// screen triangle; coordinates are continuous with pixel `u` spanning `[u, u+1)`.
pub fn fill_triangle(tri: [P2; 3], width: u32, height: u32, mut visit: impl FnMut(u32, u32)) {
    let area = edge(&tri[0], &tri[1], &tri[2]);
    if !(area.abs() > 1e-12) {
        return;
    }
    let s = area.signum();
    let (mut lo, mut hi) = (tri[0], tri[0]);
    for p in &tri[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let u0 = (lo.x - 0.5).ceil().max(0.0);
    let u1 = (hi.x - 0.5).floor().min(width as f64 - 1.0);
    let v0 = (lo.y - 0.5).ceil().max(0.0);
    let v1 = (hi.y - 0.5).floor().min(height as f64 - 1.0);
    if !(u0 <= u1 && v0 <= v1) {
        return;
    }
    for v in v0 as u32..=v1 as u32 {
        for u in u0 as u32..=u1 as u32 {
            let p = P2::new(u as f64 + 0.5, v as f64 + 0.5);
            if s * edge(&tri[0], &tri[1], &p) >= 0.0
                && s * edge(&tri[1], &tri[2], &p) >= 0.0
                && s * edge(&tri[2], &tri[0], &p) >= 0.0
            {
                visit(u, v);
            }
        }
    }
}

/// Sutherland–Hodgman clip of a camera-space triangle against `z >= NEAR`.
fn clip_near(tri: &[Vec3; 3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        let (ina, inb) = (a.z >= NEAR, b.z >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let s = (NEAR - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * s;
            p.z = NEAR;
            out.push(p);
        }
    }
    out
}

/// Ray `s·d` against a camera-space triangle; returns `(s, α)`.
fn intersect(d: &Vec3, tri: &[Vec3; 3]) -> Option<(f64, [f64; 3])> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let pvec = d.cross(&e2);
    let det = e1.dot(&pvec);
    if !(det.abs() > 1e-300) {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = -tri[0];
    let b1 = tvec.dot(&pvec) * inv;
    let qvec = tvec.cross(&e1);
    let b2 = d.dot(&qvec) * inv;
    let s = e2.dot(&qvec) * inv;
    let mut a = [1.0 - b1 - b2, b1, b2];
    if !s.is_finite() || a.iter().any(|&x| !(x >= -INSIDE_TOL)) {
        return None;
    }
    for x in &mut a {
        *x = x.max(0.0);
    }
    let sum: f64 = a.iter().sum();
    Some((s, a.map(|x| x / sum)))
}

/// Renders the scene at time `t` from `cam`.
pub fn rasterize(scene: &SceneMesh, cam: &CameraParams, t: usize) -> Result<Raster, SimError> {
    if t >= scene.frames() {
        return Err(SimError::InvalidSpec(format!("time {t} outside {} frames", scene.frames())));
    }
    let (w, h) = (cam.width(), cam.height());
    let k = cam.intrinsics;
    let mut out = Raster::empty(w, h);
    let mut zbuf = vec![f64::INFINITY; (w * h) as usize];
    let mut face_base = 0u32;
    for mesh in scene.meshes() {
        let label = if mesh.is_static() { 0 } else { mesh.object_id };
        for (local, _) in mesh.faces().iter().enumerate() {
            let global = face_base + local as u32;
            let world = mesh.triangle(local, t);
            let tri = world.map(|p| cam.world_to_camera(&p));
            if tri.iter().all(|p| p.z < NEAR) {
                continue;
            }
            let poly = clip_near(&tri);
            let screen: Vec<P2> = poly
                .iter()
                .map(|p| P2::new(k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy))
                .collect();
            for j in 1..screen.len().saturating_sub(1) {
                fill_triangle([screen[0], screen[j], screen[j + 1]], w, h, |u, v| {
                    let d = Vec3::new((u as f64 + 0.5 - k.cx) / k.fx, (v as f64 + 0.5 - k.cy) / k.fy, 1.0);
                    let Some((s, alpha)) = intersect(&d, &tri) else {
                        return;
                    };
                    let i = (v * w + u) as usize;
                    if s >= NEAR && s < zbuf[i] {
                        zbuf[i] = s;
                        out.depth.data[i] = s;
                        out.depth.valid[i] = true;
                        out.seg.ids[i] = label;
                        out.hits[i] = Some(BaryCoord { face: global, alpha });
                        out.dynamic[i] = !mesh.is_static();
                    }
                });
            }
        }
        face_base += mesh.faces().len() as u32;
    }
    Ok(out)
}

/// Axis-aligned ground window for top-down silhouettes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopDownView {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub width: u32,
    pub height: u32,
}

/// Orthographic top-down silhouette of one object at time `t`; row 0 is max y.
pub fn top_down_mask(
    scene: &SceneMesh,
    object_id: u32,
    t: usize,
    view: &TopDownView,
) -> Result<Vec<bool>, SimError> {
    let mesh = scene
        .mesh(object_id)
        .ok_or_else(|| SimError::InvalidSpec(format!("no object {object_id}")))?;
    if t >= scene.frames() {
        return Err(SimError::InvalidSpec(format!("time {t} outside {} frames", scene.frames())));
    }
    let sx = view.width as f64 / (view.max[0] - view.min[0]);
    let sy = view.height as f64 / (view.max[1] - view.min[1]);
    let mut mask = vec![false; (view.width * view.height) as usize];
    for f in 0..mesh.faces().len() {
        let tri = mesh
            .triangle(f, t)
            .map(|p| P2::new((p.x - view.min[0]) * sx, (view.max[1] - p.y) * sy));
        fill_triangle(tri, view.width, view.height, |u, v| mask[(v * view.width + u) as usize] = true);
    }
    Ok(mask)
}
