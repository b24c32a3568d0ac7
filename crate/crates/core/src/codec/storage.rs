//! Closed-form storage accounting at four bytes per scalar.

use serde::Serialize;

pub const BYTES_PER_SCALAR: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageMode {
    /// Every DPM `P_i(π₀, t_j)` materialized: `3·H·W·T·N` scalars.
    Dense,
    /// Four scalars per pixel plus `3·V·T` vertex-trajectory scalars.
    Compact,
    /// Three-channel frames, `3·H·W·N` scalars.
    RawRgb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StorageEstimate {
    pub mode: StorageMode,
    /// Per-pixel payload (points, records or colours).
    pub pixel_bytes: u64,
    /// Vertex trajectories; zero except in compact mode.
    pub vertex_bytes: u64,
    pub total_bytes: u64,
}

pub fn storage_estimate(
    height: u64,
    width: u64,
    times: u64,
    cameras: u64,
    vertices: u64,
    mode: StorageMode,
) -> StorageEstimate {
    let pixels = height * width;
    let frames = times * cameras;
    let (pixel_bytes, vertex_bytes) = match mode {
        StorageMode::Dense => (3 * BYTES_PER_SCALAR * pixels * times * frames, 0),
        StorageMode::Compact => (
            4 * BYTES_PER_SCALAR * pixels * frames,
            3 * BYTES_PER_SCALAR * vertices * times,
        ),
        StorageMode::RawRgb => (3 * BYTES_PER_SCALAR * pixels * frames, 0),
    };
    StorageEstimate {
        mode,
        pixel_bytes,
        vertex_bytes,
        total_bytes: pixel_bytes + vertex_bytes,
    }
}

pub const KIB: f64 = 1024.0;
pub const MIB: f64 = KIB * 1024.0;
pub const GIB: f64 = MIB * 1024.0;
pub const TIB: f64 = GIB * 1024.0;

/// Binary-prefixed human-readable size.
pub fn human_bytes(bytes: u64) -> String {
    let b = bytes as f64;
    for (unit, scale) in [("TiB", TIB), ("GiB", GIB), ("MiB", MIB), ("KiB", KIB)] {
        if b >= scale {
            return format!("{:.2} {unit}", b / scale);
        }
    }
    format!("{bytes} B")
}
