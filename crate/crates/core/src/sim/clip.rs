//! The full generation pipeline: compose, sample cameras, rasterize, encode.

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{sample_rig, sample_trajectory, CameraMotionSpec, MotionRanges, RigPattern};
use super::raster::rasterize;
use super::scene::{compose_scene, Scene, SceneSpec};
use super::{substream, SimError};
use crate::codec::{ClipArchive, ClipHeader, Frame};
use crate::encoder::{encode_frame, EncodeReport, FrameAccels, DEFAULT_SURFACE_TOLERANCE};
use crate::geometry::{CameraParams, DepthMap, FrameId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClipSpec {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// `T`, time steps per camera.
    pub frames: u32,
    /// `C`, cameras per clip.
    pub cameras: u32,
    pub rig: RigPattern,
    pub scene: SceneSpec,
    pub motion: MotionRanges,
    /// Explicit shots; when non-empty they replace the sampled rig.
    pub shots: Vec<CameraMotionSpec>,
    pub surface_tolerance: f64,
}

impl Default for ClipSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 128,
            height: 128,
            frames: 24,
            cameras: 8,
            rig: RigPattern::Independent,
            scene: SceneSpec::default(),
            motion: MotionRanges::default(),
            shots: Vec::new(),
            surface_tolerance: DEFAULT_SURFACE_TOLERANCE,
        }
    }
}

impl ClipSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.into()));
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive");
        }
        if self.frames == 0 || self.cameras == 0 {
            return bad("a clip needs at least one frame and one camera");
        }
        if !(self.surface_tolerance > 0.0 && self.surface_tolerance.is_finite()) {
            return bad("surface tolerance must be positive");
        }
        if !self.shots.is_empty() && self.shots.len() != self.cameras as usize {
            return Err(SimError::InvalidSpec(format!(
                "{} explicit shots for {} cameras",
                self.shots.len(),
                self.cameras
            )));
        }
        self.scene.validate()?;
        self.motion.validate()
    }
}

pub struct GeneratedClip {
    pub archive: ClipArchive,
    pub report: EncodeReport,
    pub scene: Scene,
    pub shots: Vec<CameraMotionSpec>,
    /// `[camera][time]`.
    pub trajectories: Vec<Vec<CameraParams>>,
}

fn caption(scene: &Scene) -> String {
    let nouns: Vec<&str> = scene.objects.iter().map(|o| o.kind.noun()).collect();
    let list = match nouns.as_slice() {
        [] => String::from("nothing"),
        [one] => format!("a {one}"),
        [init @ .., last] => {
            let head: Vec<String> = init.iter().map(|n| format!("a {n}")).collect();
            format!("{} and a {last}", head.join(", "))
        }
    };
    format!("A scene with {list} moving near its centre.")
}

/// Generates, rasterizes and encodes a clip. `config` is embedded verbatim
/// in the archive metadata next to what the generator resolved from it.
pub fn generate_clip(spec: &ClipSpec, config: serde_json::Value) -> Result<GeneratedClip, SimError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let (times, cams) = (spec.frames as usize, spec.cameras as usize);

    let scene_seed = spec.scene.seed.unwrap_or_else(|| substream(spec.seed, "scene").random());
    let scene = compose_scene(&spec.scene, scene_seed, times)?;

    let shots = if spec.shots.is_empty() {
        sample_rig(spec.rig, cams, &spec.motion, &mut substream(spec.seed, "rig"))?
    } else {
        spec.shots.clone()
    };
    let trajectories = shots
        .iter()
        .map(|s| sample_trajectory(s, times, scene.camera_root, w, h))
        .collect::<Result<Vec<_>, _>>()?;

    let accels = (0..times)
        .into_par_iter()
        .map(|t| FrameAccels::build(&scene.mesh, t))
        .collect::<Result<Vec<_>, _>>()?;

    // Frames are independent; collect keeps the time-major order.
    let encoded = (0..times * cams)
        .into_par_iter()
        .map(|flat| -> Result<(Frame, EncodeReport), SimError> {
            let id = FrameId::from_flat(flat, spec.cameras);
            let (c, t) = (id.camera as usize, id.time as usize);
            let cam = trajectories[c][t];
            let raster = rasterize(&scene.mesh, &cam, t)?;
            // The archive stores f32 depth, so encode exactly what is stored.
            let z = raster
                .depth
                .data
                .iter()
                .zip(&raster.depth.valid)
                .map(|(&z, &ok)| if ok { z as f32 as f64 } else { 0.0 })
                .collect();
            let depth = DepthMap::from_values(w, h, z);
            let enc = encode_frame(&depth, Some(&raster.seg), &cam, &scene.mesh, &accels[t], spec.surface_tolerance)?;
            Ok((
                Frame {
                    id,
                    camera: cam,
                    depth,
                    seg: raster.seg,
                    bary: enc.bary,
                },
                enc.report,
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = EncodeReport::default();
    let mut frames = Vec::with_capacity(encoded.len());
    for (f, r) in encoded {
        report.merge(&r);
        frames.push(f);
    }

    let objects: Vec<serde_json::Value> = scene
        .objects
        .iter()
        .map(|o| serde_json::json!({ "object_id": o.object_id, "kind": o.kind, "offset": o.offset, "yaw_deg": o.yaw_deg }))
        .collect();
    let metadata = serde_json::json!({
        "generator": { "name": "dpmkit", "version": env!("CARGO_PKG_VERSION") },
        "config": config,
        "seed": spec.seed,
        "scene_seed": scene_seed,
        "rig": spec.rig,
        "shots": shots,
        "objects": objects,
        "camera_root": [scene.camera_root.x, scene.camera_root.y, scene.camera_root.z],
        "caption": caption(&scene),
        "encode_report": report,
    });

    let archive = ClipArchive {
        header: ClipHeader {
            width: w,
            height: h,
            times: spec.frames,
            cameras: spec.cameras,
            surface_tolerance: spec.surface_tolerance,
        },
        metadata,
        scene: scene.mesh.clone(),
        frames,
    };
    Ok(GeneratedClip {
        archive,
        report,
        scene,
        shots,
        trajectories,
    })
}
