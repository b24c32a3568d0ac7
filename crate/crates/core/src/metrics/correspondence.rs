//! Multiview correspondence error between predicted and ground-truth
//! target-view point maps, restricted to mutual nearest neighbours.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{PointMap, Vec3};
use crate::spatial::PointGrid;

/// Mutual nearest-neighbour pairs `(target pixel, source pixel)` over valid
/// pixels, in ascending target-pixel order.
pub fn mutual_matches(source: &PointMap, target: &PointMap) -> Vec<(usize, usize)> {
    let src_idx: Vec<usize> = (0..source.len()).filter(|&i| source.valid[i]).collect();
    let tgt_idx: Vec<usize> = (0..target.len()).filter(|&i| target.valid[i]).collect();
    if src_idx.is_empty() || tgt_idx.is_empty() {
        return Vec::new();
    }
    let src_pts: Vec<Vec3> = src_idx.iter().map(|&i| source.data[i]).collect();
    let tgt_pts: Vec<Vec3> = tgt_idx.iter().map(|&i| target.data[i]).collect();
    let (src_grid, tgt_grid) = (PointGrid::build(&src_pts), PointGrid::build(&tgt_pts));
    tgt_pts
        .iter()
        .enumerate()
        .filter_map(|(a, p)| {
            let (b, _) = src_grid.nearest(p)?;
            let (back, _) = tgt_grid.nearest(&src_pts[b])?;
            (back == a).then_some((tgt_idx[a], src_idx[b]))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceResult {
    /// Mean over frames with matches of the per-frame mean error.
    pub l_cor: f64,
    /// Per frame: matched count (0 means excluded).
    pub matches: Vec<usize>,
    /// Frames excluded because no mutual match (with a valid prediction) exists.
    pub empty_frames: Vec<usize>,
}

/// Matches come from the ground-truth source/target maps only; the predicted
/// target is compared at matched target pixels where it is valid.
pub fn correspondence_error(
    pred_target: &[PointMap],
    gt_source: &[PointMap],
    gt_target: &[PointMap],
) -> Result<CorrespondenceResult, MetricsError> {
    let t = gt_target.len();
    if pred_target.len() != t {
        return Err(MetricsError::LengthMismatch(pred_target.len(), t));
    }
    if gt_source.len() != t {
        return Err(MetricsError::LengthMismatch(gt_source.len(), t));
    }
    let mut matches = Vec::with_capacity(t);
    let mut empty_frames = Vec::new();
    let (mut sum, mut frames) = (0.0, 0usize);
    for i in 0..t {
        let (pred, src, tgt) = (&pred_target[i], &gt_source[i], &gt_target[i]);
        if pred.dims() != tgt.dims() || src.dims() != tgt.dims() {
            return Err(MetricsError::DimensionMismatch(format!("frame {i}")));
        }
        let (mut s, mut n) = (0.0, 0usize);
        for (u, _) in mutual_matches(src, tgt) {
            if pred.valid[u] {
                s += (tgt.data[u] - pred.data[u]).norm();
                n += 1;
            }
        }
        matches.push(n);
        if n == 0 {
            empty_frames.push(i);
        } else {
            sum += s / n as f64;
            frames += 1;
        }
    }
    if frames == 0 {
        return Err(MetricsError::NoValid("correspondences"));
    }
    Ok(CorrespondenceResult {
        l_cor: sum / frames as f64,
        matches,
        empty_frames,
    })
}
