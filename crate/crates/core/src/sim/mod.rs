//! Deterministic procedural clip generator: scene layout, camera rigs,
//! rasterized ground truth and the encoded archive.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoder::EncodeError;
use crate::geometry::GeometryError;
use crate::mesh::MeshError;

pub mod camera;
pub mod clip;
pub mod noise;
pub mod objects;
pub mod raster;
pub mod scene;

pub use camera::{
    sample_rig, sample_trajectory, CameraMotionSpec, Keyframe, MotionKind, MotionRanges, RigPattern, HFOV_MAX_DEG,
    HFOV_MIN_DEG,
};
pub use clip::{generate_clip, ClipSpec, GeneratedClip};
pub use noise::{perlin_shake, GradientNoise, LookAtPose, ShakeSpec, NOISE_BOUND};
pub use objects::ObjectKind;
pub use raster::{rasterize, top_down_mask, Raster, TopDownView};
pub use scene::{compose_scene, OccupancyGrid, PlacedObject, Scene, SceneSpec};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("could not place object {object} ({kind}) after {attempts} attempts")]
    PlacementFailed { object: u32, kind: String, attempts: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// FNV-1a; stable across platforms and toolchains, unlike `DefaultHasher`.
fn name_hash(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Independent generator for the named purpose, derived from the clip seed.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(name_hash(name));
    rng
}
