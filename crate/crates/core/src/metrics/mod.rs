//! Evaluation metrics: trajectory alignment and pose errors, 3D tracking,
//! depth, reconstruction and multiview correspondence errors.

use thiserror::Error;

pub mod align;
pub mod correspondence;
pub mod depth;
pub mod recon;
pub mod tracks;
pub mod trajectory;

pub use align::{alignment_rms, umeyama, Similarity};
pub use correspondence::{correspondence_error, mutual_matches, CorrespondenceResult};
pub use depth::{depth_metrics, DepthAlign, DepthMetrics, DELTA_THRESHOLD};
pub use recon::{estimate_normals, recon_metrics, ReconMetrics, NORMAL_NEIGHBOURS};
pub use tracks::{track_apd, track_epe, ApdThresholds, Epe, TrackSet};
pub use trajectory::{
    align_trajectory, ate, rotation_angle_deg, rpe, trajectory_metrics, Alignment, Pose, Rpe, Trajectory,
    TrajectoryMetrics,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no valid {0} to evaluate")]
    NoValid(&'static str),
    #[error("ground-truth depth at index {index} is not positive")]
    NonPositiveGt { index: usize },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
