//! Procedural animated primitives in a local frame (ground at z = 0, centred on the origin).

use std::f64::consts::TAU;

use nalgebra::Rotation3;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    /// Bouncing, breathing sphere sliding back and forth.
    Sphere,
    /// Two-link articulated arm on a pedestal.
    Arm,
    /// Cloth grid waving on a pole.
    Flag,
    /// Walking box-figure.
    Human,
    /// Cube that jumps between two spots; used to exercise the motion filter.
    Teleporter,
    /// Cube that never moves; the motion filter's keep case.
    Idle,
}

impl ObjectKind {
    pub const RANDOM_POOL: [ObjectKind; 3] = [ObjectKind::Sphere, ObjectKind::Arm, ObjectKind::Flag];

    pub fn noun(self) -> &'static str {
        match self {
            ObjectKind::Sphere => "ball",
            ObjectKind::Arm => "robot arm",
            ObjectKind::Flag => "flag",
            ObjectKind::Human => "person",
            ObjectKind::Teleporter => "blinking cube",
            ObjectKind::Idle => "cube",
        }
    }
}

/// Per-frame vertex buffers over a fixed face list.
#[derive(Clone, Debug)]
pub struct ProceduralMesh {
    pub frames: Vec<Vec<Vec3>>,
    pub faces: Vec<[u32; 3]>,
}

/// Accumulates parts posed independently per frame.
#[derive(Default)]
struct Builder {
    verts: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

impl Builder {
    fn add(&mut self, verts: &[Vec3], faces: &[[u32; 3]]) {
        let base = self.verts.len() as u32;
        self.verts.extend_from_slice(verts);
        self.faces.extend(faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }
}

/// Axis-aligned box spanning `min..max`; 8 vertices, 12 outward triangles.
pub fn box_mesh(min: Vec3, max: Vec3) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let v: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        })
        .collect();
    let f = vec![
        [0, 2, 1], [1, 2, 3], // -z
        [4, 5, 6], [5, 7, 6], // +z
        [0, 1, 4], [1, 5, 4], // -y
        [2, 6, 3], [3, 6, 7], // +y
        [0, 4, 2], [2, 4, 6], // -x
        [1, 3, 5], [3, 7, 5], // +x
    ];
    (v, f)
}

/// UV sphere with `lon` segments and `lat` rings, poles included.
pub fn sphere_mesh(center: Vec3, radius: f64, lon: u32, lat: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut v = vec![center + Vec3::new(0.0, 0.0, radius)];
    for i in 1..lat {
        let th = std::f64::consts::PI * i as f64 / lat as f64;
        for j in 0..lon {
            let ph = TAU * j as f64 / lon as f64;
            v.push(center + radius * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
        }
    }
    v.push(center - Vec3::new(0.0, 0.0, radius));
    let south = v.len() as u32 - 1;
    let ring = |i: u32, j: u32| 1 + (i - 1) * lon + j % lon;
    let mut f = Vec::new();
    for j in 0..lon {
        f.push([0, ring(1, j), ring(1, j + 1)]);
        f.push([south, ring(lat - 1, j + 1), ring(lat - 1, j)]);
    }
    for i in 1..lat - 1 {
        for j in 0..lon {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            f.push([a, c, b]);
            f.push([b, c, d]);
        }
    }
    (v, f)
}

/// Box of half-extents `half` whose local frame is posed by `rot` and `origin`,
/// with the box offset by `offset` inside that frame.
fn posed_box(b: &mut Builder, half: Vec3, offset: Vec3, rot: &Rotation3<f64>, origin: Vec3) {
    let (v, f) = box_mesh(-half, half);
    let v: Vec<Vec3> = v.iter().map(|p| origin + rot * (p + offset)).collect();
    b.add(&v, &f);
}

/// Motion parameters are drawn from `rng` so each instance moves differently.
pub fn build<R: Rng + ?Sized>(kind: ObjectKind, frames: usize, rng: &mut R) -> ProceduralMesh {
    match kind {
        ObjectKind::Sphere => sphere(frames, rng),
        ObjectKind::Arm => arm(frames, rng),
        ObjectKind::Flag => flag(frames, rng),
        ObjectKind::Human => human(frames, rng),
        ObjectKind::Teleporter => teleporter(frames),
        ObjectKind::Idle => idle(frames),
    }
}

fn collect(frames: usize, mut pose: impl FnMut(usize) -> Builder) -> ProceduralMesh {
    let mut faces = Vec::new();
    let frames = (0..frames)
        .map(|t| {
            let b = pose(t);
            if t == 0 {
                faces = b.faces;
            }
            b.verts
        })
        .collect();
    ProceduralMesh { frames, faces }
}

fn sphere<R: Rng + ?Sized>(frames: usize, rng: &mut R) -> ProceduralMesh {
    let radius = rng.random_range(0.25..0.4);
    let travel = rng.random_range(0.3..0.7);
    let period = rng.random_range(20.0..40.0);
    let phase = rng.random_range(0.0..TAU);
    let (unit, faces) = sphere_mesh(Vec3::zeros(), 1.0, 16, 10);
    collect(frames, |t| {
        let w = TAU * t as f64 / period + phase;
        let breathe = 1.0 + 0.08 * (2.0 * w).sin();
        // Squash vertically while breathing: a non-rigid deformation.
        let scale = Vec3::new(radius * breathe, radius * breathe, radius / breathe);
        let c = Vec3::new(travel * w.sin(), 0.0, radius / breathe + 0.15 * w.cos().abs());
        let mut b = Builder::default();
        let v: Vec<Vec3> = unit.iter().map(|p| c + p.component_mul(&scale)).collect();
        b.add(&v, &faces);
        b
    })
}

fn arm<R: Rng + ?Sized>(frames: usize, rng: &mut R) -> ProceduralMesh {
    let (l1, l2) = (rng.random_range(0.4..0.6), rng.random_range(0.3..0.5));
    let period = rng.random_range(24.0..48.0);
    let phase = rng.random_range(0.0..TAU);
    let yaw_rate = rng.random_range(-0.05..0.05);
    collect(frames, |t| {
        let w = TAU * t as f64 / period + phase;
        let mut b = Builder::default();
        let (v, f) = box_mesh(Vec3::new(-0.15, -0.15, 0.0), Vec3::new(0.15, 0.15, 0.4));
        b.add(&v, &f);
        let yaw = Rotation3::from_axis_angle(&Vec3::z_axis(), yaw_rate * t as f64);
        let shoulder = Vec3::new(0.0, 0.0, 0.45);
        let r1 = yaw * Rotation3::from_axis_angle(&Vec3::y_axis(), -0.9 + 0.5 * w.sin());
        posed_box(&mut b, Vec3::new(l1 / 2.0, 0.06, 0.06), Vec3::new(l1 / 2.0, 0.0, 0.0), &r1, shoulder);
        let elbow = shoulder + r1 * Vec3::new(l1, 0.0, 0.0);
        let r2 = r1 * Rotation3::from_axis_angle(&Vec3::y_axis(), 1.2 + 0.6 * (1.3 * w).cos());
        posed_box(&mut b, Vec3::new(l2 / 2.0, 0.05, 0.05), Vec3::new(l2 / 2.0, 0.0, 0.0), &r2, elbow);
        b
    })
}

fn flag<R: Rng + ?Sized>(frames: usize, rng: &mut R) -> ProceduralMesh {
    let (nx, nz) = (9usize, 6usize);
    let (width, height) = (rng.random_range(0.6..0.9), rng.random_range(0.4..0.55));
    let amp = rng.random_range(0.05..0.12);
    let period = rng.random_range(12.0..24.0);
    let top = 1.2;
    collect(frames, |t| {
        let w = TAU * t as f64 / period;
        let mut b = Builder::default();
        let (v, f) = box_mesh(Vec3::new(-0.03, -0.03, 0.0), Vec3::new(0.03, 0.03, top));
        b.add(&v, &f);
        let mut v = Vec::with_capacity(nx * nz);
        for k in 0..nz {
            for i in 0..nx {
                let s = i as f64 / (nx - 1) as f64;
                let x = 0.03 + s * width;
                let z = top - height * k as f64 / (nz - 1) as f64;
                let y = amp * s * (3.0 * s - w).sin();
                v.push(Vec3::new(x, y, z - 0.04 * s * s));
            }
        }
        let mut f = Vec::new();
        for k in 0..nz - 1 {
            for i in 0..nx - 1 {
                let a = (k * nx + i) as u32;
                let (b1, c, d) = (a + 1, a + nx as u32, a + nx as u32 + 1);
                f.push([a, c, b1]);
                f.push([b1, c, d]);
            }
        }
        b.add(&v, &f);
        b
    })
}

fn human<R: Rng + ?Sized>(frames: usize, rng: &mut R) -> ProceduralMesh {
    let period = rng.random_range(20.0..32.0);
    let turn = rng.random_range(-0.04..0.04);
    let stride = 0.45;
    let (head, head_faces) = sphere_mesh(Vec3::zeros(), 0.12, 10, 6);
    collect(frames, |t| {
        let w = TAU * t as f64 / period;
        let yaw = Rotation3::from_axis_angle(&Vec3::z_axis(), turn * t as f64);
        let bob = Vec3::new(0.0, 0.0, 0.02 * (2.0 * w).cos());
        let mut b = Builder::default();
        posed_box(&mut b, Vec3::new(0.1, 0.18, 0.27), Vec3::zeros(), &yaw, Vec3::new(0.0, 0.0, 1.1) + bob);
        let hv: Vec<Vec3> = head.iter().map(|p| Vec3::new(0.0, 0.0, 1.52) + bob + yaw * p).collect();
        b.add(&hv, &head_faces);
        for (side, sign) in [(-1.0, 1.0), (1.0, -1.0)] {
            let hip = Vec3::new(0.0, 0.0, 0.83) + bob + yaw * Vec3::new(0.0, 0.09 * side, 0.0);
            let leg = yaw * Rotation3::from_axis_angle(&Vec3::y_axis(), sign * stride * w.sin());
            posed_box(&mut b, Vec3::new(0.06, 0.06, 0.4), Vec3::new(0.0, 0.0, -0.4), &leg, hip);
            let shoulder = Vec3::new(0.0, 0.0, 1.33) + bob + yaw * Vec3::new(0.0, 0.24 * side, 0.0);
            let arm = yaw * Rotation3::from_axis_angle(&Vec3::y_axis(), -sign * stride * w.sin());
            posed_box(&mut b, Vec3::new(0.045, 0.045, 0.3), Vec3::new(0.0, 0.0, -0.3), &arm, shoulder);
        }
        b
    })
}

fn teleporter(frames: usize) -> ProceduralMesh {
    collect(frames, |t| {
        let x = if (t / 4) % 2 == 0 { -0.8 } else { 0.8 };
        let (v, f) = box_mesh(Vec3::new(x - 0.2, -0.2, 0.0), Vec3::new(x + 0.2, 0.2, 0.4));
        let mut b = Builder::default();
        b.add(&v, &f);
        b
    })
}

fn idle(frames: usize) -> ProceduralMesh {
    collect(frames, |_| {
        let (v, f) = box_mesh(Vec3::new(-0.2, -0.2, 0.0), Vec3::new(0.2, 0.2, 0.4));
        let mut b = Builder::default();
        b.add(&v, &f);
        b
    })
}

/// Subdivided ground square of side `size` centred at `center` (z = 0).
pub fn ground(center: Vec3, size: f64, cells: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let n = cells + 1;
    let mut v = Vec::with_capacity((n * n) as usize);
    for j in 0..n {
        for i in 0..n {
            v.push(center + Vec3::new(
                size * (i as f64 / cells as f64 - 0.5),
                size * (j as f64 / cells as f64 - 0.5),
                0.0,
            ));
        }
    }
    let mut f = Vec::new();
    for j in 0..cells {
        for i in 0..cells {
            let a = j * n + i;
            f.push([a, a + 1, a + n]);
            f.push([a + 1, a + n + 1, a + n]);
        }
    }
    (v, f)
}
