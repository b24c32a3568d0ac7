//! Extraction of per-pixel barycentric records from depth maps: for every
//! surface pixel, find the union-mesh face and simplex weights closest to
//! the unprojected point at the frame's own time.

mod bvh;
mod closest;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{BaryMap, PixelRecord, SegMap};
use crate::geometry::{CameraParams, DepthMap, Vec3};
use crate::mesh::{BaryCoord, MeshError, SceneMesh};

pub use bvh::{Aabb, FaceAccel};
pub use closest::closest_point_on_triangle;

/// Residuals within this distance of the minimum count as ties; the lowest
/// face index wins.
pub const TIE_EPS: f64 = 1e-9;

/// Default distance below which a pixel is considered on the mesh.
pub const DEFAULT_SURFACE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("no faces to fit against")]
    NoFaces,
    #[error("segmentation references unknown instance {0}")]
    UnknownInstance(u32),
    #[error("depth, segmentation and camera dimensions disagree")]
    DimensionMismatch,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub bary: BaryCoord,
    pub residual: f64,
}

/// Exhaustive argmin over `faces` of the point-to-triangle distance at time `t`.
pub fn brute_force_fit(
    qbar: &Vec3,
    scene: &SceneMesh,
    t: usize,
    faces: impl IntoIterator<Item = u32>,
) -> Result<FitResult, EncodeError> {
    let mut all = Vec::new();
    for f in faces {
        let tri = scene.triangle(f, t)?;
        let (alpha, p) = closest_point_on_triangle(qbar, &tri);
        all.push((f, (qbar - p).norm(), alpha));
    }
    let best = all.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    bvh::select(all.into_iter(), best).ok_or(EncodeError::NoFaces)
}

/// Accelerated argmin; identical to [`brute_force_fit`] over the same faces.
pub fn fit_pixel(qbar: &Vec3, accel: &FaceAccel) -> Result<FitResult, EncodeError> {
    accel.nearest(qbar).ok_or(EncodeError::NoFaces)
}

/// Builds a BVH over `faces` of `scene` frozen at time `t`.
pub fn build_accel(
    scene: &SceneMesh,
    t: usize,
    faces: impl IntoIterator<Item = u32>,
) -> Result<FaceAccel, EncodeError> {
    let tris = faces
        .into_iter()
        .map(|f| Ok((f, scene.triangle(f, t)?)))
        .collect::<Result<Vec<_>, MeshError>>()?;
    Ok(FaceAccel::build(tris))
}

/// Per-instance and whole-scene accelerators for one time step, shared by
/// every camera observing that time.
#[derive(Clone, Debug)]
pub struct FrameAccels {
    pub time: usize,
    instances: BTreeMap<u32, FaceAccel>,
    whole: FaceAccel,
}

impl FrameAccels {
    pub fn build(scene: &SceneMesh, t: usize) -> Result<Self, EncodeError> {
        let mut instances = BTreeMap::new();
        for m in scene.meshes() {
            if !m.is_static() {
                instances.insert(m.object_id, build_accel(scene, t, scene.faces_of(m.object_id)?)?);
            }
        }
        let whole = build_accel(scene, t, 0..scene.face_count() as u32)?;
        Ok(Self {
            time: t,
            instances,
            whole,
        })
    }

    pub fn instance(&self, object_id: u32) -> Option<&FaceAccel> {
        self.instances.get(&object_id)
    }

    pub fn whole(&self) -> &FaceAccel {
        &self.whole
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PixelFit {
    Invalid,
    Static,
    Dynamic(FitResult),
    /// Dynamic by segmentation but farther than the surface tolerance.
    Rejected(FitResult),
}

/// Counts and residual statistics of one or more encoded frames.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub frames: usize,
    pub dynamic_candidates: usize,
    pub encoded: usize,
    pub rejected: usize,
    pub worst_residual: f64,
    pub worst_encoded_residual: f64,
    /// Residual counts in decades: `< 1e-9`, `< 1e-8`, ..., `< 1e-3`, `>= 1e-3`.
    pub residual_histogram: [usize; 8],
}

impl EncodeReport {
    fn record(&mut self, fit: &PixelFit) {
        let r = match fit {
            PixelFit::Dynamic(f) => {
                self.encoded += 1;
                self.worst_encoded_residual = self.worst_encoded_residual.max(f.residual);
                f.residual
            }
            PixelFit::Rejected(f) => {
                self.rejected += 1;
                f.residual
            }
            _ => return,
        };
        self.dynamic_candidates += 1;
        self.worst_residual = self.worst_residual.max(r);
        let bucket = (0..7).find(|&k| r < 10f64.powi(k as i32 - 9)).unwrap_or(7);
        self.residual_histogram[bucket] += 1;
    }

    pub fn merge(&mut self, other: &EncodeReport) {
        self.frames += other.frames;
        self.dynamic_candidates += other.dynamic_candidates;
        self.encoded += other.encoded;
        self.rejected += other.rejected;
        self.worst_residual = self.worst_residual.max(other.worst_residual);
        self.worst_encoded_residual = self.worst_encoded_residual.max(other.worst_encoded_residual);
        for (a, b) in self.residual_histogram.iter_mut().zip(other.residual_histogram) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncodedFrame {
    pub bary: BaryMap,
    /// Unquantized fits, row-major.
    pub fits: Vec<PixelFit>,
    pub report: EncodeReport,
}

/// Encodes one frame observed at time `accels.time`.
///
/// Pixels labelled 0 in `seg` are static; others are fitted against their
/// own instance's faces. Without a segmentation map the whole scene is
/// searched and the owning mesh decides static versus dynamic.
pub fn encode_frame(
    depth: &DepthMap,
    seg: Option<&SegMap>,
    cam: &CameraParams,
    scene: &SceneMesh,
    accels: &FrameAccels,
    surface_tolerance: f64,
) -> Result<EncodedFrame, EncodeError> {
    let (w, h) = (cam.width(), cam.height());
    if depth.dims() != (w, h) || seg.is_some_and(|s| (s.width, s.height) != (w, h)) {
        return Err(EncodeError::DimensionMismatch);
    }
    if let Some(seg) = seg {
        if let Some(&id) = seg
            .ids
            .iter()
            .find(|&&id| id != 0 && accels.instance(id).is_none())
        {
            return Err(EncodeError::UnknownInstance(id));
        }
    }
    let rows: Vec<Vec<PixelFit>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .map(|u| {
                    let Some(&z) = depth.get(u, v) else {
                        return Ok(PixelFit::Invalid);
                    };
                    let qbar = cam.camera_to_world(&cam.backproject(u, v, z));
                    let fit = match seg {
                        Some(seg) => match seg.get(u, v) {
                            0 => return Ok(PixelFit::Static),
                            id => fit_pixel(&qbar, accels.instance(id).expect("checked above"))?,
                        },
                        None => {
                            let fit = fit_pixel(&qbar, accels.whole())?;
                            let owner = scene.face_ref(fit.bary.face)?.mesh as usize;
                            if scene.meshes()[owner].is_static() {
                                return Ok(PixelFit::Static);
                            }
                            fit
                        }
                    };
                    Ok(if fit.residual <= surface_tolerance {
                        PixelFit::Dynamic(fit)
                    } else {
                        PixelFit::Rejected(fit)
                    })
                })
                .collect::<Result<Vec<_>, EncodeError>>()
        })
        .collect::<Result<_, _>>()?;
    let fits: Vec<PixelFit> = rows.into_iter().flatten().collect();
    let mut report = EncodeReport {
        frames: 1,
        ..Default::default()
    };
    let records = fits
        .iter()
        .map(|f| {
            report.record(f);
            match f {
                PixelFit::Invalid => PixelRecord::INVALID,
                PixelFit::Static | PixelFit::Rejected(_) => PixelRecord::STATIC,
                PixelFit::Dynamic(fit) => PixelRecord::dynamic(&fit.bary),
            }
        })
        .collect();
    Ok(EncodedFrame {
        bary: BaryMap {
            width: w,
            height: h,
            records,
        },
        fits,
        report,
    })
}
