//! Prediction and export file formats.
//!
//! * Trajectories: TUM text, one `timestamp tx ty tz qx qy qz qw` line per
//!   frame, camera-to-world.
//! * Tracks: JSON, see [`TrackFile`].
//! * Depth and point maps: the `DPMA` binary array (little-endian):
//!
//! ```text
//! magic "DPMA" | u32 version = 1 | u32 channels (1 or 3) | u32 scalar bytes (4 or 8)
//! u32 frames | u32 height | u32 width | frames·height·width·channels scalars
//! ```
//!
//! Invalid pixels hold NaN in every channel.

use std::path::Path;

use dpmkit::metrics::TrackSet;
use dpmkit::{DepthMap, FrameId, PointMap, RefFrame, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ARRAY_MAGIC: &[u8; 4] = b"DPMA";
pub const ARRAY_VERSION: u32 = 1;
const ARRAY_HEADER: usize = 28;

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayFile {
    pub channels: u32,
    pub frames: u32,
    pub height: u32,
    pub width: u32,
    pub data: Vec<f64>,
}

impl ArrayFile {
    pub fn from_depths(maps: &[DepthMap]) -> Self {
        let (w, h) = maps.first().map_or((0, 0), |m| m.dims());
        let data = maps
            .iter()
            .flat_map(|m| m.data.iter().zip(&m.valid).map(|(&z, &ok)| if ok { z } else { f64::NAN }))
            .collect();
        Self { channels: 1, frames: maps.len() as u32, height: h, width: w, data }
    }

    pub fn from_points(maps: &[PointMap]) -> Self {
        let (w, h) = maps.first().map_or((0, 0), |m| m.dims());
        let mut data = Vec::new();
        for m in maps {
            for (p, &ok) in m.data.iter().zip(&m.valid) {
                if ok {
                    data.extend_from_slice(p.as_slice());
                } else {
                    data.extend_from_slice(&[f64::NAN; 3]);
                }
            }
        }
        Self { channels: 3, frames: maps.len() as u32, height: h, width: w, data }
    }

    pub fn to_depths(&self) -> Result<Vec<DepthMap>, CliError> {
        if self.channels != 1 {
            return Err(CliError::Schema(format!("expected a depth array, found {} channels", self.channels)));
        }
        let n = (self.width * self.height) as usize;
        Ok(self
            .data
            .chunks(n.max(1))
            .take(self.frames as usize)
            .map(|c| DepthMap::from_values(self.width, self.height, c.to_vec()))
            .collect())
    }

    pub fn to_points(&self) -> Result<Vec<PointMap>, CliError> {
        if self.channels != 3 {
            return Err(CliError::Schema(format!("expected a point array, found {} channels", self.channels)));
        }
        let n = (self.width * self.height) as usize;
        Ok(self
            .data
            .chunks((3 * n).max(1))
            .take(self.frames as usize)
            .map(|c| {
                let mut pm = PointMap::empty(self.width, self.height);
                for (i, p) in c.chunks(3).enumerate() {
                    if p.iter().all(|v| v.is_finite()) {
                        pm.data[i] = Vec3::new(p[0], p[1], p[2]);
                        pm.valid[i] = true;
                    }
                }
                pm
            })
            .collect())
    }

    pub fn to_bytes(&self, scalar_bytes: u32) -> Vec<u8> {
        let mut out = Vec::with_capacity(ARRAY_HEADER + self.data.len() * scalar_bytes as usize);
        out.extend_from_slice(ARRAY_MAGIC);
        for v in [ARRAY_VERSION, self.channels, scalar_bytes, self.frames, self.height, self.width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &x in &self.data {
            if scalar_bytes == 8 {
                out.extend_from_slice(&x.to_le_bytes());
            } else {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, CliError> {
        if b.len() < 4 || &b[..4] != ARRAY_MAGIC {
            return Err(CliError::Schema("not a DPMA array file".into()));
        }
        if b.len() < ARRAY_HEADER {
            return Err(CliError::Corrupt("array header is truncated".into()));
        }
        let u = |i: usize| u32::from_le_bytes(b[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
        let (version, channels, scalar, frames, height, width) = (u(0), u(1), u(2), u(3), u(4), u(5));
        if version != ARRAY_VERSION {
            return Err(CliError::Schema(format!("unsupported DPMA version {version}")));
        }
        if !matches!(channels, 1 | 3) || !matches!(scalar, 4 | 8) {
            return Err(CliError::Schema(format!("unsupported layout: {channels} channels, {scalar}-byte scalars")));
        }
        let count = frames as usize * height as usize * width as usize * channels as usize;
        let body = &b[ARRAY_HEADER..];
        if body.len() != count * scalar as usize {
            return Err(CliError::Corrupt(format!(
                "array body has {} bytes, header implies {}",
                body.len(),
                count * scalar as usize
            )));
        }
        let data = if scalar == 8 {
            body.chunks(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
        } else {
            body.chunks(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect()
        };
        Ok(Self { channels, frames, height, width, data })
    }

    pub fn write(&self, path: &Path, scalar_bytes: u32) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes(scalar_bytes))?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

pub const TRACK_FORMAT: &str = "dpmkit-tracks";
pub const TRACK_VERSION: u32 = 1;

/// Reference frame as written in files and on the command line:
/// `"world"`, `"first"` or `"<camera>,<time>"`.
pub fn parse_reference(s: &str) -> Result<RefFrame, CliError> {
    match s {
        "world" => Ok(RefFrame::World),
        "first" => Ok(RefFrame::FIRST),
        _ => parse_pair(s).map(|(c, t)| RefFrame::Frame(FrameId::new(c, t))),
    }
}

pub fn reference_name(r: &RefFrame) -> String {
    match r {
        RefFrame::World => "world".into(),
        RefFrame::Frame(id) if *id == FrameId::new(0, 0) => "first".into(),
        RefFrame::Frame(id) => format!("{},{}", id.camera, id.time),
        RefFrame::Camera(_) => "camera".into(),
    }
}

pub fn parse_pair(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Usage(format!("expected `a,b`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// A set of query pixels in one frame and their tracks over `times`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackFile {
    pub format: String,
    pub version: u32,
    /// `[camera, time]` of the query frame.
    pub frame: [u32; 2],
    pub reference: String,
    pub times: Vec<u32>,
    /// `[u, v]` per track.
    pub pixels: Vec<[i64; 2]>,
    /// `points[track][k]` at `times[k]`.
    pub points: Vec<Vec<[f64; 3]>>,
    /// Same shape as `points`; all true when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<Vec<Vec<bool>>>,
}

impl TrackFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let f: TrackFile = serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("track file: {e}")))?;
        if f.format != TRACK_FORMAT || f.version != TRACK_VERSION {
            return Err(CliError::Schema(format!(
                "track file is {} v{}, expected {TRACK_FORMAT} v{TRACK_VERSION}",
                f.format, f.version
            )));
        }
        Ok(f)
    }

    pub fn to_track_set(&self) -> Result<TrackSet, CliError> {
        let t = self.times.len();
        if self.points.len() != self.pixels.len() || self.points.iter().any(|p| p.len() != t) {
            return Err(CliError::Schema("track points do not match pixels × times".into()));
        }
        let points = self.points.iter().flatten().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        let valid = match &self.valid {
            Some(v) => {
                if v.len() != self.pixels.len() || v.iter().any(|r| r.len() != t) {
                    return Err(CliError::Schema("track validity does not match pixels × times".into()));
                }
                v.iter().flatten().copied().collect()
            }
            None => vec![true; self.pixels.len() * t],
        };
        Ok(TrackSet::new(self.pixels.len(), t, points, valid)?)
    }
}
