//! Data-filtering heuristics: motion screening of animated assets, occlusion
//! filtering of per-frame visibility masks, and camera coverage statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::ClipArchive;
use crate::geometry::{CameraParams, Vec3};
use crate::mesh::SceneMesh;
use crate::sim::{self, ObjectKind, SceneSpec, SimError, TopDownView};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurationError {
    #[error("mask dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
    #[error("motion filtering needs at least two masks, got {0}")]
    TooFewFrames(usize),
    #[error("camera {camera}, frame {frame} coincides with the root")]
    CameraAtRoot { camera: usize, frame: usize },
    #[error("no camera poses")]
    NoPoses,
}

/// Row-major binary mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

/// Unoccluded pixels of one tracked instance.
pub type VisibilityMask = Mask;

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), (width * height) as usize, "mask size");
        Self { width, height, bits }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; (width * height) as usize])
    }

    /// Axis-aligned filled rectangle `[u0, u0+w) × [v0, v0+h)`, clipped to the mask.
    pub fn rect(width: u32, height: u32, u0: u32, v0: u32, w: u32, h: u32) -> Self {
        let mut m = Self::empty(width, height);
        for v in v0..(v0 + h).min(height) {
            for u in u0..(u0 + w).min(width) {
                m.set(u, v, true);
            }
        }
        m
    }

    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[(v * self.width + u) as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, on: bool) {
        self.bits[(v * self.width + u) as usize] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Inclusive pixel bounds `(u0, v0, u1, v1)` of the set pixels.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut b: Option<(u32, u32, u32, u32)> = None;
        for v in 0..self.height {
            for u in 0..self.width {
                if self.get(u, v) {
                    b = Some(match b {
                        None => (u, v, u, v),
                        Some((a, c, d, e)) => (a.min(u), c.min(v), d.max(u), e.max(v)),
                    });
                }
            }
        }
        b
    }

    pub fn bbox_area(&self) -> u64 {
        self.bbox()
            .map_or(0, |(u0, v0, u1, v1)| (u1 - u0 + 1) as u64 * (v1 - v0 + 1) as u64)
    }

    fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// `|a ∩ b| / |a ∪ b|`; two empty masks count as identical (1.0).
pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64, CurationError> {
    if a.dims() != b.dims() {
        return Err(CurationError::DimensionMismatch(a.dims(), b.dims()));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionFilterConfig {
    /// Adjacent frames with IoU below this reject the asset.
    pub iou_threshold: f64,
    /// Allowed `area(t+1) / area(t)` band; outside it counts as extreme deformation.
    pub area_ratio: [f64; 2],
}

impl Default for MotionFilterConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            area_ratio: [0.5, 2.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotionRejection {
    LowIou { pair: usize, iou: f64 },
    Deformation { pair: usize, area_ratio: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionReport {
    pub keep: bool,
    pub min_iou: f64,
    pub mean_iou: f64,
    /// Per adjacent pair `(t, t+1)`.
    pub ious: Vec<f64>,
    /// First failing pair, if any.
    pub rejection: Option<MotionRejection>,
}

/// Screens one asset's per-frame silhouettes for fast motion and extreme deformation.
pub fn motion_filter(masks: &[Mask], cfg: &MotionFilterConfig) -> Result<MotionReport, CurationError> {
    if masks.len() < 2 {
        return Err(CurationError::TooFewFrames(masks.len()));
    }
    let mut ious = Vec::with_capacity(masks.len() - 1);
    let mut rejection = None;
    for (pair, w) in masks.windows(2).enumerate() {
        let iou = mask_iou(&w[0], &w[1])?;
        ious.push(iou);
        if rejection.is_some() {
            continue;
        }
        if iou < cfg.iou_threshold {
            rejection = Some(MotionRejection::LowIou { pair, iou });
            continue;
        }
        let (a, b) = (w[0].count(), w[1].count());
        if a > 0 && b > 0 {
            let area_ratio = b as f64 / a as f64;
            if area_ratio < cfg.area_ratio[0] || area_ratio > cfg.area_ratio[1] {
                rejection = Some(MotionRejection::Deformation { pair, area_ratio });
            }
        }
    }
    Ok(MotionReport {
        keep: rejection.is_none(),
        min_iou: ious.iter().copied().fold(f64::INFINITY, f64::min),
        mean_iou: ious.iter().sum::<f64>() / ious.len() as f64,
        ious,
        rejection,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcclusionConfig {
    pub min_bbox_area: u64,
    pub min_visible_ratio: f64,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            min_bbox_area: 10_000,
            min_visible_ratio: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OcclusionReason {
    /// No segmentation for the instance: fully occluded.
    MissingMask,
    SmallBox { area: u64 },
    LowVisibility { ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionDecision {
    pub keep: bool,
    pub reason: Option<OcclusionReason>,
    pub bbox_area: u64,
    pub visible: u64,
}

/// Keeps a frame unless the mask is missing, its bounding box is too small,
/// or too little of the box is visible. Checks run in that order.
pub fn occlusion_filter(visibility: Option<&VisibilityMask>, cfg: &OcclusionConfig) -> OcclusionDecision {
    let Some(mask) = visibility else {
        return OcclusionDecision {
            keep: false,
            reason: Some(OcclusionReason::MissingMask),
            bbox_area: 0,
            visible: 0,
        };
    };
    let area = mask.bbox_area();
    let visible = mask.count() as u64;
    let reason = if area < cfg.min_bbox_area {
        Some(OcclusionReason::SmallBox { area })
    } else {
        let ratio = visible as f64 / area as f64;
        (ratio < cfg.min_visible_ratio).then_some(OcclusionReason::LowVisibility { ratio })
    };
    OcclusionDecision {
        keep: reason.is_none(),
        reason,
        bbox_area: area,
        visible,
    }
}

/// Top-down silhouettes of one object over every clip time.
pub fn object_masks(scene: &SceneMesh, object_id: u32, view: &TopDownView) -> Result<Vec<Mask>, SimError> {
    (0..scene.frames())
        .map(|t| Ok(Mask::new(view.width, view.height, sim::top_down_mask(scene, object_id, t, view)?)))
        .collect()
}

/// Silhouettes of a single procedural object seen from above over `frames`
/// steps, on a 64×64 view of the occupancy grid.
pub fn demo_object_masks(kind: ObjectKind, frames: usize, seed: u64) -> Result<Vec<Mask>, SimError> {
    let spec = SceneSpec {
        dynamic_objects: 1,
        kinds: vec![kind],
        human: false,
        clutter: 0,
        environment: false,
        ..SceneSpec::default()
    };
    let scene = sim::compose_scene(&spec, seed, frames)?;
    let g = &scene.occupancy;
    let extent = g.cell_size * g.cells as f64;
    let view = TopDownView {
        min: g.origin,
        max: [g.origin[0] + extent, g.origin[1] + extent],
        width: 64,
        height: 64,
    };
    object_masks(&scene.mesh, scene.objects[0].object_id, &view)
}

/// Square top-down window around an object's footprint over all times,
/// padded by 10% on each side.
pub fn object_view(scene: &SceneMesh, object_id: u32, resolution: u32) -> Option<TopDownView> {
    let mesh = scene.mesh(object_id)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for t in 0..scene.frames() {
        for p in mesh.vertices_at(t) {
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
    }
    if !(lo[0] <= hi[0]) {
        return None;
    }
    let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let half = 0.6 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-6);
    Some(TopDownView {
        min: [c[0] - half, c[1] - half],
        max: [c[0] + half, c[1] + half],
        width: resolution,
        height: resolution,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub motion: MotionFilterConfig,
    pub occlusion: OcclusionConfig,
    /// Side of the top-down silhouette grid used by the motion filter.
    pub view_resolution: u32,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            motion: MotionFilterConfig::default(),
            occlusion: OcclusionConfig::default(),
            view_resolution: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectCuration {
    pub object_id: u32,
    pub motion: MotionReport,
    /// Per frame, in archive order.
    pub occlusion: Vec<OcclusionDecision>,
    pub frames_kept: usize,
}

/// Motion screening and per-frame occlusion filtering of every dynamic object.
pub fn curate_clip(clip: &ClipArchive, cfg: &CurationConfig) -> Result<Vec<ObjectCuration>, SimError> {
    let scene = &clip.scene;
    let mut out = Vec::new();
    for m in scene.meshes().iter().filter(|m| !m.is_static()) {
        let id = m.object_id;
        let view = object_view(scene, id, cfg.view_resolution)
            .ok_or_else(|| SimError::InvalidSpec(format!("object {id} has no vertices")))?;
        let motion = motion_filter(&object_masks(scene, id, &view)?, &cfg.motion)
            .map_err(|e| SimError::InvalidSpec(e.to_string()))?;
        let occlusion: Vec<OcclusionDecision> = clip
            .frames
            .iter()
            .map(|f| {
                let mask = Mask::new(f.seg.width, f.seg.height, f.seg.mask(id));
                occlusion_filter((mask.count() > 0).then_some(&mask), &cfg.occlusion)
            })
            .collect();
        let frames_kept = occlusion.iter().filter(|d| d.keep).count();
        out.push(ObjectCuration {
            object_id: id,
            motion,
            occlusion,
            frames_kept,
        });
    }
    Ok(out)
}

/// Spherical coverage of a set of camera paths about `root`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    /// Measure of the union of swept azimuth arcs, capped at 360°.
    pub azimuth_span_deg: f64,
    pub polar_span_deg: f64,
    pub radial_span: f64,
}

/// Spans of the spherical coordinates of all camera centres about `root`.
/// Each camera's azimuth is unwrapped frame to frame, and the arcs of all
/// cameras are united on the circle.
pub fn coverage_stats(trajectories: &[Vec<CameraParams>], root: Vec3) -> Result<CoverageStats, CurationError> {
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    let (mut pmin, mut pmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (camera, traj) in trajectories.iter().enumerate() {
        let mut unwrapped: Option<f64> = None;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (frame, cam) in traj.iter().enumerate() {
            let d = cam.position - root;
            let r = d.norm();
            if !(r > 1e-12) {
                return Err(CurationError::CameraAtRoot { camera, frame });
            }
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            let polar = (d.z / r).clamp(-1.0, 1.0).acos().to_degrees();
            pmin = pmin.min(polar);
            pmax = pmax.max(polar);
            let az = d.y.atan2(d.x).to_degrees();
            let a = match unwrapped {
                None => az,
                Some(prev) => prev + (az - prev + 180.0).rem_euclid(360.0) - 180.0,
            };
            unwrapped = Some(a);
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if lo <= hi {
            arcs.push((lo, hi));
        }
    }
    if arcs.is_empty() {
        return Err(CurationError::NoPoses);
    }
    Ok(CoverageStats {
        azimuth_span_deg: arc_union_measure(&arcs),
        polar_span_deg: pmax - pmin,
        radial_span: rmax - rmin,
    })
}

/// Measure of a union of arcs `(start, end)` on the circle, in degrees.
pub fn arc_union_measure(arcs: &[(f64, f64)]) -> f64 {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for &(lo, hi) in arcs {
        if hi - lo >= 360.0 {
            return 360.0;
        }
        let a = lo.rem_euclid(360.0);
        let b = a + (hi - lo);
        if b <= 360.0 {
            pieces.push((a, b));
        } else {
            pieces.push((a, 360.0));
            pieces.push((0.0, b - 360.0));
        }
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in pieces {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = cur {
        total += cb - ca;
    }
    total.min(360.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{sample_trajectory, CameraMotionSpec, Keyframe, MotionKind, ShakeSpec};
    use proptest::prelude::*;

    #[test]
    fn iou_basics() {
        let a = Mask::rect(8, 8, 1, 1, 4, 4);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        let b = Mask::rect(8, 8, 5, 5, 3, 3);
        assert_eq!(mask_iou(&a, &b).unwrap(), 0.0);
        assert_eq!(mask_iou(&Mask::empty(8, 8), &Mask::empty(8, 8)).unwrap(), 1.0);
        assert!(mask_iou(&a, &Mask::empty(8, 7)).is_err());
    }

    #[test]
    fn iou_half_width_shift_by_counting() {
        // 4×4 block shifted right by 2 on an 8×8 grid: overlap 2×4 = 8,
        // union 16 + 16 − 8 = 24.
        let a = Mask::rect(8, 8, 0, 2, 4, 4);
        let b = Mask::rect(8, 8, 2, 2, 4, 4);
        let mut inter = 0;
        let mut union = 0;
        for v in 0..8 {
            for u in 0..8 {
                inter += (a.get(u, v) && b.get(u, v)) as u32;
                union += (a.get(u, v) || b.get(u, v)) as u32;
            }
        }
        assert_eq!((inter, union), (8, 24));
        assert!((mask_iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_identity(
            a in proptest::collection::vec(any::<bool>(), 36),
            b in proptest::collection::vec(any::<bool>(), 36),
        ) {
            let (ma, mb) = (Mask::new(6, 6, a.clone()), Mask::new(6, 6, b.clone()));
            let ab = mask_iou(&ma, &mb).unwrap();
            prop_assert_eq!(ab, mask_iou(&mb, &ma).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            if ma.count() > 0 {
                prop_assert_eq!(ab == 1.0, a == b);
            }
        }

        #[test]
        fn occlusion_monotone_inside_box(
            extra in proptest::collection::vec((0u32..120, 0u32..120), 0..400),
            w in 60u32..121,
            h in 60u32..121,
        ) {
            // Sparse diagonal pixels spanning a w×h box, then more pixels inside it.
            let mut m = Mask::empty(128, 128);
            for k in 0..w.min(h) {
                m.set(k * (w - 1) / (w.min(h) - 1).max(1), k * (h - 1) / (w.min(h) - 1).max(1), true);
            }
            let cfg = OcclusionConfig::default();
            let before = occlusion_filter(Some(&m), &cfg);
            for (u, v) in extra {
                m.set(u % w, v % h, true);
            }
            let after = occlusion_filter(Some(&m), &cfg);
            prop_assert_eq!(before.bbox_area, after.bbox_area);
            prop_assert!(!before.keep || after.keep);
        }
    }

    #[test]
    fn occlusion_documented_cases() {
        let cfg = OcclusionConfig::default();
        let full = Mask::rect(256, 256, 10, 10, 200, 200);
        let d = occlusion_filter(Some(&full), &cfg);
        assert!(d.keep);
        assert_eq!((d.bbox_area, d.visible), (40_000, 40_000));

        let small = Mask::rect(256, 256, 0, 0, 50, 50);
        let d = occlusion_filter(Some(&small), &cfg);
        assert_eq!(d.reason, Some(OcclusionReason::SmallBox { area: 2_500 }));

        // 200×200 box outlined by its corners, with 11,000 visible pixels.
        let mut m = Mask::empty(256, 256);
        m.set(0, 0, true);
        m.set(199, 199, true);
        let mut n = 2;
        'fill: for v in 0..200 {
            for u in 0..200 {
                if n == 11_000 {
                    break 'fill;
                }
                if !m.get(u, v) {
                    m.set(u, v, true);
                    n += 1;
                }
            }
        }
        let d = occlusion_filter(Some(&m), &cfg);
        assert_eq!(d.bbox_area, 40_000);
        assert_eq!(d.visible, 11_000);
        assert_eq!(d.reason, Some(OcclusionReason::LowVisibility { ratio: 0.275 }));

        assert_eq!(occlusion_filter(None, &cfg).reason, Some(OcclusionReason::MissingMask));
    }

    #[test]
    fn motion_filter_static_and_teleport() {
        let still = vec![Mask::rect(16, 16, 3, 3, 5, 5); 6];
        for th in [0.0, 0.5, 0.99] {
            assert!(motion_filter(&still, &MotionFilterConfig { iou_threshold: th, ..Default::default() }).unwrap().keep);
        }
        let jump: Vec<Mask> = (0..6).map(|t| Mask::rect(16, 16, if t % 2 == 0 { 0 } else { 8 }, 0, 4, 4)).collect();
        for th in [1e-6, 0.5] {
            let r = motion_filter(&jump, &MotionFilterConfig { iou_threshold: th, ..Default::default() }).unwrap();
            assert!(!r.keep);
            assert_eq!(r.min_iou, 0.0);
        }
        assert_eq!(motion_filter(&still[..1], &MotionFilterConfig::default()), Err(CurationError::TooFewFrames(1)));
    }

    #[test]
    fn motion_filter_slow_drift() {
        // 8×8 block drifting one pixel per frame: IoU = 56 / 72 each step.
        let drift: Vec<Mask> = (0..10).map(|t| Mask::rect(32, 32, t, 4, 8, 8)).collect();
        let expected = 56.0 / 72.0;
        let keep = motion_filter(&drift, &MotionFilterConfig::default()).unwrap();
        assert!(keep.keep);
        assert!((keep.min_iou - expected).abs() < 1e-12);
        let strict = MotionFilterConfig { iou_threshold: 0.99, ..Default::default() };
        assert!(!motion_filter(&drift, &strict).unwrap().keep);
    }

    #[test]
    fn motion_filter_flags_deformation() {
        let grow = vec![Mask::rect(32, 32, 0, 0, 4, 4), Mask::rect(32, 32, 0, 0, 8, 8)];
        let cfg = MotionFilterConfig { iou_threshold: 0.2, ..Default::default() };
        let r = motion_filter(&grow, &cfg).unwrap();
        assert_eq!(r.rejection, Some(MotionRejection::Deformation { pair: 0, area_ratio: 4.0 }));
    }

    #[test]
    fn procedural_demos() {
        let cfg = MotionFilterConfig::default();
        let tele = demo_object_masks(ObjectKind::Teleporter, 12, 1).unwrap();
        assert!(!motion_filter(&tele, &cfg).unwrap().keep);
        let idle = demo_object_masks(ObjectKind::Idle, 12, 1).unwrap();
        let r = motion_filter(&idle, &cfg).unwrap();
        assert!(r.keep && r.min_iou == 1.0);
    }

    #[test]
    fn clip_curation_rejects_teleporter_only() {
        use crate::sim::{generate_clip, ClipSpec};
        let spec = ClipSpec {
            seed: 3,
            width: 32,
            height: 32,
            frames: 12,
            cameras: 1,
            scene: SceneSpec {
                dynamic_objects: 2,
                kinds: vec![ObjectKind::Teleporter, ObjectKind::Idle],
                human: false,
                ..SceneSpec::default()
            },
            ..ClipSpec::default()
        };
        let clip = generate_clip(&spec, serde_json::Value::Null).unwrap().archive;
        let r = curate_clip(&clip, &CurationConfig::default()).unwrap();
        assert_eq!(r.len(), 2);
        assert!(!r[0].motion.keep, "teleporter kept");
        assert!(r[1].motion.keep, "idle rejected");
        assert!(r.iter().all(|o| o.occlusion.len() == 12));
        // 32×32 frames never reach the default 10⁴-pixel box.
        assert!(r.iter().all(|o| o.frames_kept == 0));
    }

    fn orbit(dp: f64, dr: f64, dt: f64, kind: MotionKind) -> Vec<CameraParams> {
        let spec = CameraMotionSpec {
            kind,
            radius: 5.0,
            polar_deg: 60.0,
            azimuth_deg: 170.0,
            keyframes: vec![Keyframe { time: 1.0, d_radius: dr, d_polar_deg: dt, d_azimuth_deg: dp }],
            truck: 0.0,
            shake: ShakeSpec::NONE,
            hfov_deg: 60.0,
        };
        sample_trajectory(&spec, 41, Vec3::zeros(), 8, 8).unwrap()
    }

    #[test]
    fn coverage_of_simple_paths() {
        let s = coverage_stats(&[orbit(0.0, 0.0, 0.0, MotionKind::Static)], Vec3::zeros()).unwrap();
        assert!(s.azimuth_span_deg.abs() < 1e-9 && s.polar_span_deg.abs() < 1e-9 && s.radial_span.abs() < 1e-9);
        let full = coverage_stats(&[orbit(360.0, 0.0, 0.0, MotionKind::Orbit)], Vec3::zeros()).unwrap();
        assert!((full.azimuth_span_deg - 360.0).abs() < 1e-9);
        // Crosses ±180°: the span stays the requested 200°.
        let c = coverage_stats(&[orbit(200.0, 2.0, 15.0, MotionKind::Orbit)], Vec3::zeros()).unwrap();
        assert!((c.azimuth_span_deg - 200.0).abs() < 1e-6);
        assert!((c.polar_span_deg - 15.0).abs() < 1e-6);
        assert!((c.radial_span - 2.0).abs() < 1e-6);
    }

    #[test]
    fn coverage_invariant_to_rotation_about_vertical() {
        let paths = vec![orbit(120.0, 1.0, 10.0, MotionKind::Orbit), orbit(-90.0, -1.5, -20.0, MotionKind::Orbit)];
        let base = coverage_stats(&paths, Vec3::zeros()).unwrap();
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), 1.234);
        let root = Vec3::new(2.0, -1.0, 0.5);
        let moved: Vec<Vec<CameraParams>> = paths
            .iter()
            .map(|p| {
                p.iter()
                    .map(|c| CameraParams { position: rot * c.position + root, ..*c })
                    .collect()
            })
            .collect();
        let s = coverage_stats(&moved, root).unwrap();
        assert!((s.azimuth_span_deg - base.azimuth_span_deg).abs() < 1e-6);
        assert!((s.polar_span_deg - base.polar_span_deg).abs() < 1e-6);
        assert!((s.radial_span - base.radial_span).abs() < 1e-9);
    }

    #[test]
    fn coverage_rejects_camera_at_root() {
        let mut p = orbit(10.0, 0.0, 0.0, MotionKind::Orbit);
        p[3].position = Vec3::zeros();
        assert_eq!(
            coverage_stats(&[p], Vec3::zeros()),
            Err(CurationError::CameraAtRoot { camera: 0, frame: 3 })
        );
        assert_eq!(coverage_stats(&[], Vec3::zeros()), Err(CurationError::NoPoses));
    }

    #[test]
    fn arc_union_handles_wrap_and_overlap() {
        assert_eq!(arc_union_measure(&[]), 0.0);
        assert!((arc_union_measure(&[(350.0, 370.0), (0.0, 5.0)]) - 20.0).abs() < 1e-9);
        assert!((arc_union_measure(&[(0.0, 90.0), (180.0, 270.0)]) - 180.0).abs() < 1e-9);
        assert!((arc_union_measure(&[(-10.0, 10.0), (5.0, 50.0)]) - 60.0).abs() < 1e-9);
        assert_eq!(arc_union_measure(&[(0.0, 400.0)]), 360.0);
    }
}
