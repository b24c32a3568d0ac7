//! Camera trajectories, ATE and RPE.

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::align::{umeyama, Similarity};
use super::MetricsError;
use crate::geometry::{CameraParams, Mat3, Vec3};

const ORTHO_TOL: f64 = 1e-6;

/// Camera-to-world pose: `x_world = rotation · x_cam + position`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Mat3,
    pub position: Vec3,
}

impl Pose {
    pub fn from_camera(cam: &CameraParams) -> Self {
        Self {
            rotation: cam.rotation.transpose(),
            position: cam.position,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            position: -(rt * self.position),
        }
    }

    pub fn compose(&self, o: &Pose) -> Self {
        Self {
            rotation: self.rotation * o.rotation,
            position: self.rotation * o.position + self.position,
        }
    }
}

/// Geodesic angle of a rotation matrix, degrees.
pub fn rotation_angle_deg(r: &Mat3) -> f64 {
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub timestamps: Vec<f64>,
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(timestamps: Vec<f64>, poses: Vec<Pose>) -> Result<Self, MetricsError> {
        if timestamps.len() != poses.len() {
            return Err(MetricsError::LengthMismatch(timestamps.len(), poses.len()));
        }
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MetricsError::InvalidTrajectory("timestamps must increase".into()));
        }
        for (i, p) in poses.iter().enumerate() {
            let r = &p.rotation;
            let err = (r * r.transpose() - Mat3::identity()).abs().max();
            if !(err <= ORTHO_TOL) || (r.determinant() - 1.0).abs() > ORTHO_TOL {
                return Err(MetricsError::InvalidTrajectory(format!("pose {i} has a non-rotation matrix")));
            }
            if !p.position.iter().all(|v| v.is_finite()) {
                return Err(MetricsError::InvalidTrajectory(format!("pose {i} has a non-finite position")));
            }
        }
        Ok(Self { timestamps, poses })
    }

    /// One pose per camera, timestamps `0, 1, 2, ...`.
    pub fn from_cameras(cams: &[CameraParams]) -> Self {
        Self {
            timestamps: (0..cams.len()).map(|i| i as f64).collect(),
            poses: cams.iter().map(Pose::from_camera).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.poses.iter().map(|p| p.position).collect()
    }

    /// Applies a similarity to the world frame of every pose.
    pub fn transformed(&self, s: &Similarity) -> Self {
        Self {
            timestamps: self.timestamps.clone(),
            poses: self
                .poses
                .iter()
                .map(|p| Pose {
                    rotation: s.rotation * p.rotation,
                    position: s.apply(&p.position),
                })
                .collect(),
        }
    }

    /// TUM text: `timestamp tx ty tz qx qy qz qw` per line, `#` comments.
    pub fn from_tum(text: &str) -> Result<Self, MetricsError> {
        let mut ts = Vec::new();
        let mut poses = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| MetricsError::Parse { line: i + 1, msg: e.to_string() })?;
            if vals.len() != 8 {
                return Err(MetricsError::Parse {
                    line: i + 1,
                    msg: format!("expected 8 values, found {}", vals.len()),
                });
            }
            let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
            if !(q.norm() > 1e-12) {
                return Err(MetricsError::Parse { line: i + 1, msg: "zero quaternion".into() });
            }
            ts.push(vals[0]);
            poses.push(Pose {
                rotation: *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix(),
                position: Vec3::new(vals[1], vals[2], vals[3]),
            });
        }
        Self::new(ts, poses)
    }

    pub fn to_tum(&self) -> String {
        let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
        for (t, p) in self.timestamps.iter().zip(&self.poses) {
            let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(p.rotation));
            out.push_str(&format!(
                "{t} {} {} {} {} {} {} {}\n",
                p.position.x, p.position.y, p.position.z, q.i, q.j, q.k, q.w
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    None,
    Rigid,
    #[default]
    Similarity,
}

fn check_lengths(pred: &Trajectory, gt: &Trajectory) -> Result<(), MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gt.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::NoValid("poses"));
    }
    Ok(())
}

/// Transform mapping `pred` camera centres onto `gt`.
pub fn align_trajectory(pred: &Trajectory, gt: &Trajectory, mode: Alignment) -> Result<Similarity, MetricsError> {
    check_lengths(pred, gt)?;
    match mode {
        Alignment::None => Ok(Similarity::identity()),
        Alignment::Rigid => umeyama(&pred.positions(), &gt.positions(), false),
        Alignment::Similarity => umeyama(&pred.positions(), &gt.positions(), true),
    }
}

/// RMS of camera-centre residuals after alignment.
pub fn ate(pred: &Trajectory, gt: &Trajectory, mode: Alignment) -> Result<f64, MetricsError> {
    let s = align_trajectory(pred, gt, mode)?;
    let sum: f64 = pred
        .poses
        .iter()
        .zip(&gt.poses)
        .map(|(p, g)| (g.position - s.apply(&p.position)).norm_squared())
        .sum();
    Ok((sum / pred.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rpe {
    /// Mean translation norm of the relative-motion error.
    pub translation: f64,
    /// Mean geodesic angle of the relative-motion error, degrees.
    pub rotation_deg: f64,
}

/// Errors of consecutive relative motions `E = (gᵢ⁻¹gᵢ₊₁)⁻¹ (pᵢ⁻¹pᵢ₊₁)`, averaged.
pub fn rpe(pred: &Trajectory, gt: &Trajectory) -> Result<Rpe, MetricsError> {
    check_lengths(pred, gt)?;
    if pred.len() < 2 {
        return Err(MetricsError::NoValid("pose pairs"));
    }
    let (mut t, mut r) = (0.0, 0.0);
    for i in 0..pred.len() - 1 {
        let rel_p = pred.poses[i].inverse().compose(&pred.poses[i + 1]);
        let rel_g = gt.poses[i].inverse().compose(&gt.poses[i + 1]);
        let e = rel_g.inverse().compose(&rel_p);
        t += e.position.norm();
        r += rotation_angle_deg(&e.rotation);
    }
    let n = (pred.len() - 1) as f64;
    Ok(Rpe {
        translation: t / n,
        rotation_deg: r / n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub ate: f64,
    pub rpe_t: f64,
    pub rpe_r_deg: f64,
    pub alignment: Similarity,
}

/// ATE plus RPE of the aligned prediction (so RPE-T is in ground-truth units).
pub fn trajectory_metrics(pred: &Trajectory, gt: &Trajectory, mode: Alignment) -> Result<TrajectoryMetrics, MetricsError> {
    let s = align_trajectory(pred, gt, mode)?;
    let aligned = pred.transformed(&s);
    let r = rpe(&aligned, gt)?;
    Ok(TrajectoryMetrics {
        ate: ate(&aligned, gt, Alignment::None)?,
        rpe_t: r.translation,
        rpe_r_deg: r.rotation_deg,
        alignment: s,
    })
}
