//! Batched track and point-map queries for data loaders.
//!
//! Every index of a batch is validated before any work is done, so a batch
//! either succeeds entirely or fails without output. Results are flat
//! row-major `f64` buffers and match the single-query API bit for bit.

use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{ClipArchive, QueryError, RefFrame};
use crate::geometry::FrameId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatchError {
    #[error("batch has {frames} frame ids but {pixels} pixels")]
    LengthMismatch { frames: usize, pixels: usize },
    #[error("empty time selection")]
    NoTimes,
    #[error("batch entry {index}: {source}")]
    Entry { index: usize, source: QueryError },
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchQuery {
    pub frames: Vec<FrameId>,
    /// `(u, v)` per entry.
    pub pixels: Vec<(i64, i64)>,
    /// Clip times to sample; `None` means all of them in order.
    pub times: Option<Vec<u32>>,
    pub reference: RefFrame,
}

impl BatchQuery {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Checks every index; returns the resolved time list.
    pub fn validate(&self, clip: &ClipArchive) -> Result<Vec<u32>, BatchError> {
        if self.frames.len() != self.pixels.len() {
            return Err(BatchError::LengthMismatch {
                frames: self.frames.len(),
                pixels: self.pixels.len(),
            });
        }
        clip.reference_camera(&self.reference)?;
        let (w, h) = (clip.header.width as i64, clip.header.height as i64);
        for (index, (id, &(u, v))) in self.frames.iter().zip(&self.pixels).enumerate() {
            let entry = |source| BatchError::Entry { index, source };
            clip.check_frame(*id).map_err(entry)?;
            if u < 0 || v < 0 || u >= w || v >= h {
                return Err(entry(QueryError::PixelOutOfRange { u, v }));
            }
        }
        let n = clip.header.times;
        let times = match &self.times {
            None => (0..n).collect(),
            Some(ts) => {
                if ts.is_empty() {
                    return Err(BatchError::NoTimes);
                }
                if let Some(&time) = ts.iter().find(|&&t| t >= n) {
                    return Err(QueryError::TimeOutOfRange { time, times: n }.into());
                }
                ts.clone()
            }
        };
        Ok(times)
    }
}

/// `B × T × 3` points and `B × T` validity, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackBatch {
    pub batch: usize,
    pub times: Vec<u32>,
    pub points: Vec<f64>,
    pub valid: Vec<bool>,
    /// Per entry: whether the pixel lies on a dynamic object.
    pub dynamic: Vec<bool>,
}

impl TrackBatch {
    pub fn shape(&self) -> [usize; 3] {
        [self.batch, self.times.len(), 3]
    }

    pub fn point(&self, b: usize, k: usize) -> [f64; 3] {
        let i = (b * self.times.len() + k) * 3;
        [self.points[i], self.points[i + 1], self.points[i + 2]]
    }
}

/// Samples the amodal track of each entry. Pixels without a surface give an
/// all-invalid row with zero points.
pub fn sample_tracks(clip: &ClipArchive, q: &BatchQuery) -> Result<TrackBatch, BatchError> {
    let times = q.validate(clip)?;
    let t = times.len();
    let rows: Vec<(Vec<f64>, bool, bool)> = q
        .frames
        .par_iter()
        .zip(q.pixels.par_iter())
        .enumerate()
        .map(|(index, (id, &px))| match clip.query_track(*id, px, &q.reference) {
            Ok(track) => {
                let mut row = Vec::with_capacity(t * 3);
                for &ti in &times {
                    row.extend_from_slice(track.points[ti as usize].as_slice());
                }
                Ok((row, true, track.dynamic))
            }
            Err(QueryError::NoSurface { .. }) => Ok((vec![0.0; t * 3], false, false)),
            Err(source) => Err(BatchError::Entry { index, source }),
        })
        .collect::<Result<_, _>>()?;
    let mut out = TrackBatch {
        batch: q.len(),
        times,
        points: Vec::with_capacity(q.len() * t * 3),
        valid: Vec::with_capacity(q.len() * t),
        dynamic: Vec::with_capacity(q.len()),
    };
    for (row, ok, dynamic) in rows {
        out.points.extend(row);
        out.valid.extend(std::iter::repeat_n(ok, t));
        out.dynamic.push(dynamic);
    }
    Ok(out)
}

/// `H × W × 3` points plus an `H × W` mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DpmArray {
    pub height: usize,
    pub width: usize,
    pub points: Vec<f64>,
    pub mask: Vec<bool>,
}

pub fn dpm_frame(clip: &ClipArchive, i: FrameId, reference: &RefFrame, t: u32) -> Result<DpmArray, BatchError> {
    let pm = clip.query_dpm(i, reference, t)?;
    let mut points = Vec::with_capacity(pm.len() * 3);
    for p in &pm.data {
        points.extend_from_slice(p.as_slice());
    }
    Ok(DpmArray {
        height: pm.height as usize,
        width: pm.width as usize,
        points,
        mask: pm.valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_clip, ClipSpec};

    fn clip() -> ClipArchive {
        let spec = ClipSpec {
            seed: 5,
            width: 24,
            height: 24,
            frames: 4,
            cameras: 2,
            ..ClipSpec::default()
        };
        generate_clip(&spec, serde_json::Value::Null).unwrap().archive
    }

    #[test]
    fn all_or_nothing() {
        let c = clip();
        let mut q = BatchQuery {
            frames: vec![FrameId::new(0, 0), FrameId::new(1, 3), FrameId::new(0, 1)],
            pixels: vec![(0, 0), (5, 5), (23, 23)],
            times: None,
            reference: RefFrame::FIRST,
        };
        assert_eq!(sample_tracks(&c, &q).unwrap().shape(), [3, 4, 3]);
        q.pixels[2] = (24, 0);
        assert!(matches!(sample_tracks(&c, &q), Err(BatchError::Entry { index: 2, .. })));
        q.pixels[2] = (1, 1);
        q.frames[1] = FrameId::new(2, 0);
        assert!(matches!(sample_tracks(&c, &q), Err(BatchError::Entry { index: 1, .. })));
        q.frames[1] = FrameId::new(1, 0);
        q.times = Some(vec![0, 4]);
        assert!(matches!(sample_tracks(&c, &q), Err(BatchError::Query(QueryError::TimeOutOfRange { .. }))));
        q.times = Some(vec![]);
        assert_eq!(sample_tracks(&c, &q), Err(BatchError::NoTimes));
        q.times = None;
        q.pixels.pop();
        assert!(matches!(sample_tracks(&c, &q), Err(BatchError::LengthMismatch { .. })));
    }

    #[test]
    fn permuting_batch_permutes_rows() {
        let c = clip();
        let frames: Vec<FrameId> = (0..8).map(|k| FrameId::new(k % 2, k % 4)).collect();
        let pixels: Vec<(i64, i64)> = (0..8).map(|k| (3 * k as i64, 23 - 2 * k as i64)).collect();
        let q = BatchQuery { frames: frames.clone(), pixels: pixels.clone(), times: Some(vec![3, 0]), reference: RefFrame::World };
        let a = sample_tracks(&c, &q).unwrap();
        let perm = [5, 2, 7, 0, 1, 6, 3, 4];
        let qp = BatchQuery {
            frames: perm.iter().map(|&k| frames[k]).collect(),
            pixels: perm.iter().map(|&k| pixels[k]).collect(),
            ..q
        };
        let b = sample_tracks(&c, &qp).unwrap();
        for (row, &k) in perm.iter().enumerate() {
            for ti in 0..2 {
                assert_eq!(b.point(row, ti), a.point(k, ti));
                assert_eq!(b.valid[row * 2 + ti], a.valid[k * 2 + ti]);
            }
        }
    }

    #[test]
    fn dpm_frame_wraps_query_dpm() {
        let c = clip();
        let id = FrameId::new(1, 2);
        let pm = c.query_dpm(id, &RefFrame::FIRST, 1).unwrap();
        let d = dpm_frame(&c, id, &RefFrame::FIRST, 1).unwrap();
        assert_eq!((d.height, d.width), (24, 24));
        assert_eq!(d.mask, pm.valid);
        for (k, p) in pm.data.iter().enumerate() {
            assert_eq!(&d.points[3 * k..3 * k + 3], p.as_slice());
        }
        assert!(dpm_frame(&c, id, &RefFrame::FIRST, 9).is_err());
    }
}
