//! Dynamic point maps for synthetic 4D clips: geometry, animated meshes, the
//! barycentric track encoder, the compact clip archive, procedural scene
//! simulation, curation filters and evaluation metrics.

// `!(x > y)` is used on purpose so NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod codec;
pub mod curation;
pub mod encoder;
pub mod geometry;
pub mod mesh;
pub mod metrics;
pub mod sim;
pub mod spatial;

pub use batch::{dpm_frame, sample_tracks, BatchError, BatchQuery, DpmArray, TrackBatch};
pub use codec::{
    read_archive, read_archive_file, write_archive, write_archive_file, ArchiveError, ClipArchive, ClipHeader,
    Frame, QueryError, RefFrame, Track,
};
pub use encoder::{encode_frame, EncodeError, EncodeReport, FrameAccels, DEFAULT_SURFACE_TOLERANCE};
pub use geometry::{
    CameraParams, DepthMap, FrameId, GeometryError, Grid, Intrinsics, Mat3, PointMap, Vec3,
};
pub use mesh::{AnimatedMesh, BaryCoord, MeshError, SceneMesh};
pub use sim::{generate_clip, ClipSpec, GeneratedClip, SimError};
