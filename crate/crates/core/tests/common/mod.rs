#![allow(dead_code)]

use dpmkit::sim::{generate_clip, ClipSpec, GeneratedClip, RigPattern};
use dpmkit::Vec3;

pub fn small_clip(seed: u64, size: u32, frames: u32, cameras: u32) -> GeneratedClip {
    let spec = ClipSpec {
        seed,
        width: size,
        height: size,
        frames,
        cameras,
        ..ClipSpec::default()
    };
    generate_clip(&spec, serde_json::json!({ "seed": seed })).expect("generate")
}

pub fn paired_clip(seed: u64, size: u32, frames: u32) -> GeneratedClip {
    let spec = ClipSpec {
        seed,
        width: size,
        height: size,
        frames,
        cameras: 2,
        rig: RigPattern::PairedOrbits,
        ..ClipSpec::default()
    };
    generate_clip(&spec, serde_json::Value::Null).expect("generate")
}

/// Pixel-centre backprojection written out by hand.
pub fn unproject_manual(cam: &dpmkit::CameraParams, u: u32, v: u32, z: f64) -> Vec3 {
    let k = &cam.intrinsics;
    let x = (u as f64 + 0.5 - k.cx) / k.fx * z;
    let y = (v as f64 + 0.5 - k.cy) / k.fy * z;
    let r = cam.rotation;
    // Rᵀ·x + o
    Vec3::new(
        r[(0, 0)] * x + r[(1, 0)] * y + r[(2, 0)] * z,
        r[(0, 1)] * x + r[(1, 1)] * y + r[(2, 1)] * z,
        r[(0, 2)] * x + r[(1, 2)] * y + r[(2, 2)] * z,
    ) + cam.position
}
