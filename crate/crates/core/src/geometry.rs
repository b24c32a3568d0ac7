//! Pinhole cameras, (un)projection, rigid reference-frame changes and the
//! per-pixel map containers shared by every other module.
//!
//! Conventions, fixed for the whole crate and recorded in archive headers:
//!
//! * `rotation` maps world axes to camera axes; `position` is the camera
//!   centre in world coordinates, so `x_cam = R (x_world - o)`.
//! * The camera looks down `+z`, `+x` is image right and `+y` is image down.
//! * Integer pixel `(u, v)` samples the image plane at `(u + 0.5, v + 0.5)`.
//! * Depth maps store the camera-frame `z`, not the ray length.

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

const ORTHO_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("pixel ({u}, {v}) is outside the {width}x{height} image")]
    OutOfBounds {
        u: i64,
        v: i64,
        width: u32,
        height: u32,
    },
    #[error("no surface at pixel ({u}, {v})")]
    NoSurface { u: u32, v: u32 },
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("degenerate look-at: {0}")]
    DegenerateLookAt(&'static str),
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        got: (u32, u32),
    },
}

/// Pinhole intrinsics with zero skew, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Square pixels with the principal point at the image centre.
    pub fn from_hfov(width: u32, height: u32, hfov_deg: f64) -> Self {
        let f = width as f64 / (2.0 * (hfov_deg.to_radians() / 2.0).tan());
        Self {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn hfov_deg(&self) -> f64 {
        (2.0 * (self.width as f64 / (2.0 * self.fx)).atan()).to_degrees()
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidCamera("zero image size".into()));
        }
        Ok(())
    }
}

/// One frame's viewpoint: intrinsics plus world-to-camera rotation and centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraParams {
    pub intrinsics: Intrinsics,
    pub rotation: Mat3,
    pub position: Vec3,
}

impl CameraParams {
    pub fn new(
        intrinsics: Intrinsics,
        rotation: Mat3,
        position: Vec3,
    ) -> Result<Self, GeometryError> {
        let cam = Self {
            intrinsics,
            rotation,
            position,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `position` looking at `target`, with `up` fixing the roll.
    pub fn look_at(
        intrinsics: Intrinsics,
        position: Vec3,
        target: Vec3,
        up: Vec3,
    ) -> Result<Self, GeometryError> {
        let rotation = look_at_rotation(position, target, up)?;
        Self::new(intrinsics, rotation, position)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.intrinsics.validate()?;
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidCamera("non-finite position".into()));
        }
        let r = &self.rotation;
        let ortho = (r * r.transpose() - Mat3::identity()).abs().max();
        if !(ortho <= ORTHO_TOL) || (r.determinant() - 1.0).abs() > ORTHO_TOL {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation is not a proper rotation (orthogonality error {ortho:e}, det {})",
                r.determinant()
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    pub fn k(&self) -> Mat3 {
        self.intrinsics.matrix()
    }

    pub fn hfov_deg(&self) -> f64 {
        self.intrinsics.hfov_deg()
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.position)
    }

    pub fn camera_to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * p + self.position
    }

    /// Viewing direction (camera `+z`) in world coordinates.
    pub fn forward(&self) -> Vec3 {
        self.rotation.row(2).transpose()
    }

    /// Camera-frame point on the ray through pixel `(u, v)` with depth `z`.
    pub fn backproject(&self, u: u32, v: u32, z: f64) -> Vec3 {
        let k = &self.intrinsics;
        let x = (u as f64 + 0.5 - k.cx) / k.fx;
        let y = (v as f64 + 0.5 - k.cy) / k.fy;
        Vec3::new(x * z, y * z, z)
    }
}

/// World-to-camera rotation for a camera at `eye` looking at `target`.
pub fn look_at_rotation(eye: Vec3, target: Vec3, up: Vec3) -> Result<Mat3, GeometryError> {
    let dir = target - eye;
    let n = dir.norm();
    if !(n > 1e-9) {
        return Err(GeometryError::DegenerateLookAt("camera coincides with its target"));
    }
    let forward = dir / n;
    let right = forward.cross(&up);
    let rn = right.norm();
    if !(rn > 1e-9) {
        return Err(GeometryError::DegenerateLookAt(
            "viewing direction is parallel to the up vector",
        ));
    }
    let right = right / rn;
    let down = forward.cross(&right);
    Ok(Mat3::from_rows(&[
        right.transpose(),
        down.transpose(),
        forward.transpose(),
    ]))
}

/// Camera index, time index and the time-major flat index `time * C + camera`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId {
    pub camera: u32,
    pub time: u32,
}

impl FrameId {
    pub fn new(camera: u32, time: u32) -> Self {
        Self { camera, time }
    }

    pub fn flat(&self, cameras: u32) -> usize {
        self.time as usize * cameras as usize + self.camera as usize
    }

    pub fn from_flat(flat: usize, cameras: u32) -> Self {
        let c = cameras as usize;
        Self {
            camera: (flat % c) as u32,
            time: (flat / c) as u32,
        }
    }
}

/// H×W grid of values plus a validity mask, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub width: u32,
    pub height: u32,
    pub data: Vec<T>,
    pub valid: Vec<bool>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: u32, height: u32, value: T) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            data: vec![value; n],
            valid: vec![false; n],
        }
    }
}

impl<T> Grid<T> {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, u: u32, v: u32) -> usize {
        v as usize * self.width as usize + u as usize
    }

    pub fn check_pixel(&self, u: i64, v: i64) -> Result<(u32, u32), GeometryError> {
        if u < 0 || v < 0 || u >= self.width as i64 || v >= self.height as i64 {
            return Err(GeometryError::OutOfBounds {
                u,
                v,
                width: self.width,
                height: self.height,
            });
        }
        Ok((u as u32, v as u32))
    }

    pub fn get(&self, u: u32, v: u32) -> Option<&T> {
        let i = self.index(u, v);
        self.valid[i].then(|| &self.data[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// Per-pixel 3D points (a DPM slice `P_i(π_k, t_j)` or `Q_i(t)`).
pub type PointMap = Grid<Vec3>;

/// Per-pixel camera-frame depth; valid entries are strictly positive.
pub type DepthMap = Grid<f64>;

impl PointMap {
    pub fn empty(width: u32, height: u32) -> Self {
        Grid::filled(width, height, Vec3::zeros())
    }

    /// The z channel; a depth map when the points are in their own camera frame.
    pub fn z_channel(&self) -> DepthMap {
        DepthMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|p| p.z).collect(),
            valid: self.valid.clone(),
        }
    }
}

impl DepthMap {
    pub fn from_values(width: u32, height: u32, z: Vec<f64>) -> Self {
        let valid = z.iter().map(|z| z.is_finite() && *z > 0.0).collect();
        Self {
            width,
            height,
            data: z,
            valid,
        }
    }
}

/// World point seen at `pixel`: `R⁻¹ K⁻¹ D(u) (u, v, 1)ᵀ + o`.
pub fn unproject(
    depth: &DepthMap,
    cam: &CameraParams,
    pixel: (i64, i64),
) -> Result<Vec3, GeometryError> {
    if depth.dims() != (cam.width(), cam.height()) {
        return Err(GeometryError::DimensionMismatch {
            expected: (cam.width(), cam.height()),
            got: depth.dims(),
        });
    }
    let (u, v) = depth.check_pixel(pixel.0, pixel.1)?;
    let z = *depth.get(u, v).ok_or(GeometryError::NoSurface { u, v })?;
    Ok(cam.camera_to_world(&cam.backproject(u, v, z)))
}

/// Continuous pixel coordinates (pixel centres at integers) and camera depth.
pub fn project(point: &Vec3, cam: &CameraParams) -> Result<(Vector2<f64>, f64), GeometryError> {
    let pc = cam.world_to_camera(point);
    if !(pc.z > 0.0) {
        return Err(GeometryError::BehindCamera { z: pc.z });
    }
    let k = &cam.intrinsics;
    let x = k.fx * pc.x / pc.z + k.cx - 0.5;
    let y = k.fy * pc.y / pc.z + k.cy - 0.5;
    Ok((Vector2::new(x, y), pc.z))
}

/// Re-express camera-frame points of `from` in the frame of `to`.
///
/// Only the extrinsics matter; the validity mask is carried over unchanged.
pub fn change_reference(pm: &PointMap, from: &CameraParams, to: &CameraParams) -> PointMap {
    let rot = to.rotation * from.rotation.transpose();
    let trans = to.rotation * (from.position - to.position);
    PointMap {
        width: pm.width,
        height: pm.height,
        data: pm
            .data
            .iter()
            .zip(&pm.valid)
            .map(|(p, &ok)| if ok { rot * p + trans } else { *p })
            .collect(),
        valid: pm.valid.clone(),
    }
}
