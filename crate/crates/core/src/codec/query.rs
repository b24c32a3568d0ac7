//! Dense point-map and track queries over a decoded clip.

use thiserror::Error;

use super::archive::{ClipArchive, Frame};
use super::barymap::PixelFlag;
use crate::geometry::{CameraParams, FrameId, PointMap, Vec3};
use crate::mesh::{MeshError, SceneMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("frame (camera {camera}, time {time}) out of range")]
    FrameOutOfRange { camera: u32, time: u32 },
    #[error("time {time} out of range ({times} frames)")]
    TimeOutOfRange { time: u32, times: u32 },
    #[error("pixel ({u}, {v}) out of range")]
    PixelOutOfRange { u: i64, v: i64 },
    #[error("no surface at pixel ({u}, {v})")]
    NoSurface { u: u32, v: u32 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Reference frame in which query results are expressed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RefFrame {
    /// The mesh frame; the archive stores everything in it.
    World,
    /// Camera frame of one of the clip's images.
    Frame(FrameId),
    Camera(CameraParams),
}

impl RefFrame {
    /// `π₀`: the camera of frame (camera 0, time 0).
    pub const FIRST: RefFrame = RefFrame::Frame(FrameId { camera: 0, time: 0 });
}

/// An amodal trajectory through one pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub points: Vec<Vec3>,
    /// False for static pixels, whose track is constant.
    pub dynamic: bool,
}

/// World-frame position at `t` of the surface seen at `(u, v)` in `frame`.
#[inline]
fn world_point(
    scene: &SceneMesh,
    frame: &Frame,
    u: u32,
    v: u32,
    t: usize,
) -> Result<Option<Vec3>, QueryError> {
    let rec = frame.bary.get(u, v);
    Ok(match rec.flag {
        PixelFlag::Invalid => None,
        PixelFlag::Dynamic => {
            let bc = rec.bary().expect("dynamic record");
            Some(bc.combine(&scene.triangle(bc.face, t)?))
        }
        PixelFlag::Static => frame
            .depth
            .get(u, v)
            .map(|&z| frame.camera.camera_to_world(&frame.camera.backproject(u, v, z))),
    })
}

/// `P_i(π, t)` for one decoded frame; `reference = None` means world.
pub fn dpm_from_frame(
    scene: &SceneMesh,
    frame: &Frame,
    reference: Option<&CameraParams>,
    t: u32,
) -> Result<PointMap, QueryError> {
    if t as usize >= scene.frames() {
        return Err(QueryError::TimeOutOfRange {
            time: t,
            times: scene.frames() as u32,
        });
    }
    let (w, h) = (frame.bary.width, frame.bary.height);
    let mut pm = PointMap::empty(w, h);
    for v in 0..h {
        for u in 0..w {
            if let Some(p) = world_point(scene, frame, u, v, t as usize)? {
                let i = pm.index(u, v);
                pm.data[i] = match reference {
                    Some(cam) => cam.world_to_camera(&p),
                    None => p,
                };
                pm.valid[i] = true;
            }
        }
    }
    Ok(pm)
}

/// Track through `pixel` of `frame` over all clip times.
pub fn track_from_frame(
    scene: &SceneMesh,
    frame: &Frame,
    pixel: (i64, i64),
    reference: Option<&CameraParams>,
) -> Result<Track, QueryError> {
    let (w, h) = (frame.bary.width as i64, frame.bary.height as i64);
    let (u, v) = pixel;
    if u < 0 || v < 0 || u >= w || v >= h {
        return Err(QueryError::PixelOutOfRange { u, v });
    }
    let (u, v) = (u as u32, v as u32);
    let rec = frame.bary.get(u, v);
    let to_ref = |p: Vec3| match reference {
        Some(cam) => cam.world_to_camera(&p),
        None => p,
    };
    let points = match rec.flag {
        PixelFlag::Invalid => return Err(QueryError::NoSurface { u, v }),
        PixelFlag::Static => {
            let p = world_point(scene, frame, u, v, 0)?.ok_or(QueryError::NoSurface { u, v })?;
            vec![to_ref(p); scene.frames()]
        }
        PixelFlag::Dynamic => {
            let bc = rec.bary().expect("dynamic record");
            let r = scene.face_ref(bc.face)?;
            let mesh = &scene.meshes()[r.mesh as usize];
            (0..scene.frames())
                .map(|t| to_ref(bc.combine(&mesh.triangle(r.local as usize, t))))
                .collect()
        }
    };
    Ok(Track {
        points,
        dynamic: rec.flag == PixelFlag::Dynamic,
    })
}

impl ClipArchive {
    pub fn check_frame(&self, id: FrameId) -> Result<&Frame, QueryError> {
        self.frame(id).ok_or(QueryError::FrameOutOfRange {
            camera: id.camera,
            time: id.time,
        })
    }

    /// Resolves a reference frame to a camera; `None` for world.
    pub fn reference_camera(&self, r: &RefFrame) -> Result<Option<CameraParams>, QueryError> {
        Ok(match r {
            RefFrame::World => None,
            RefFrame::Frame(id) => Some(self.check_frame(*id)?.camera),
            RefFrame::Camera(c) => Some(*c),
        })
    }

    /// `P_i(π_k, t_j)`: every pixel of frame `i` at time `t`, in `reference`.
    pub fn query_dpm(&self, i: FrameId, reference: &RefFrame, t: u32) -> Result<PointMap, QueryError> {
        let frame = self.check_frame(i)?;
        let cam = self.reference_camera(reference)?;
        dpm_from_frame(&self.scene, frame, cam.as_ref(), t)
    }

    /// The amodal track through `pixel` of frame `i`, in `reference`.
    pub fn query_track(
        &self,
        i: FrameId,
        pixel: (i64, i64),
        reference: &RefFrame,
    ) -> Result<Track, QueryError> {
        let frame = self.check_frame(i)?;
        let cam = self.reference_camera(reference)?;
        track_from_frame(&self.scene, frame, pixel, cam.as_ref())
    }
}
