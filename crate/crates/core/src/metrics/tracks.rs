//! 3D point-tracking metrics.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::Vec3;

/// M tracks × T times, track-major: entry `m·T + t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub tracks: usize,
    pub times: usize,
    pub points: Vec<Vec3>,
    pub valid: Vec<bool>,
}

impl TrackSet {
    pub fn new(tracks: usize, times: usize, points: Vec<Vec3>, valid: Vec<bool>) -> Result<Self, MetricsError> {
        let n = tracks * times;
        if points.len() != n {
            return Err(MetricsError::LengthMismatch(points.len(), n));
        }
        if valid.len() != n {
            return Err(MetricsError::LengthMismatch(valid.len(), n));
        }
        Ok(Self {
            tracks,
            times,
            points,
            valid,
        })
    }

    /// Fully valid tracks of equal length.
    pub fn from_tracks(tracks: &[Vec<Vec3>]) -> Result<Self, MetricsError> {
        let times = tracks.first().map_or(0, Vec::len);
        if let Some(bad) = tracks.iter().find(|t| t.len() != times) {
            return Err(MetricsError::LengthMismatch(bad.len(), times));
        }
        let points: Vec<Vec3> = tracks.iter().flatten().copied().collect();
        let valid = vec![true; points.len()];
        Self::new(tracks.len(), times, points, valid)
    }

    pub fn point(&self, m: usize, t: usize) -> Vec3 {
        self.points[m * self.times + t]
    }

    fn check_against(&self, gt: &TrackSet) -> Result<(), MetricsError> {
        if (self.tracks, self.times) != (gt.tracks, gt.times) {
            return Err(MetricsError::DimensionMismatch(format!(
                "{}×{} tracks vs {}×{}",
                self.tracks, self.times, gt.tracks, gt.times
            )));
        }
        Ok(())
    }

    /// Indices valid in both sets.
    fn joint_valid<'a>(&'a self, gt: &'a TrackSet) -> impl Iterator<Item = usize> + 'a {
        (0..self.points.len()).filter(move |&i| self.valid[i] && gt.valid[i])
    }
}

/// Distance thresholds for APD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum ApdThresholds {
    /// Fixed distances in scene units.
    Absolute(Vec<f64>),
    /// Fractions of the ground-truth point's depth `|z|` (tracks in a camera frame).
    DepthScaled(Vec<f64>),
}

impl Default for ApdThresholds {
    fn default() -> Self {
        ApdThresholds::DepthScaled(vec![0.01, 0.02, 0.04, 0.08, 0.16])
    }
}

impl ApdThresholds {
    fn values(&self) -> &[f64] {
        match self {
            ApdThresholds::Absolute(v) | ApdThresholds::DepthScaled(v) => v,
        }
    }

    fn tau(&self, k: usize, gt: &Vec3) -> f64 {
        match self {
            ApdThresholds::Absolute(v) => v[k],
            ApdThresholds::DepthScaled(v) => v[k] * gt.z.abs(),
        }
    }
}

/// Mean over thresholds of the percentage of jointly valid points with error
/// strictly below the threshold.
pub fn track_apd(pred: &TrackSet, gt: &TrackSet, thresholds: &ApdThresholds) -> Result<f64, MetricsError> {
    pred.check_against(gt)?;
    let taus = thresholds.values();
    if taus.is_empty() || taus.iter().any(|t| !(*t >= 0.0)) {
        return Err(MetricsError::Degenerate("thresholds must be a non-empty set of non-negative values".into()));
    }
    let mut hits = vec![0usize; taus.len()];
    let mut n = 0usize;
    for i in pred.joint_valid(gt) {
        let g = gt.points[i];
        let d = (pred.points[i] - g).norm();
        for (k, h) in hits.iter_mut().enumerate() {
            if d < thresholds.tau(k, &g) {
                *h += 1;
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::NoValid("track points"));
    }
    let mean_frac = hits.iter().map(|&h| h as f64 / n as f64).sum::<f64>() / taus.len() as f64;
    Ok(100.0 * mean_frac)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epe {
    /// Mean over every jointly valid point.
    pub per_point: f64,
    /// Mean over tracks of each track's mean (tracks with no valid point skipped).
    pub per_track: f64,
    pub points: usize,
}

pub fn track_epe(pred: &TrackSet, gt: &TrackSet) -> Result<Epe, MetricsError> {
    pred.check_against(gt)?;
    let (mut sum, mut n) = (0.0, 0usize);
    let (mut track_sum, mut track_n) = (0.0, 0usize);
    for m in 0..gt.tracks {
        let (mut s, mut c) = (0.0, 0usize);
        for t in 0..gt.times {
            let i = m * gt.times + t;
            if pred.valid[i] && gt.valid[i] {
                s += (pred.points[i] - gt.points[i]).norm();
                c += 1;
            }
        }
        if c > 0 {
            sum += s;
            n += c;
            track_sum += s / c as f64;
            track_n += 1;
        }
    }
    if n == 0 {
        return Err(MetricsError::NoValid("track points"));
    }
    Ok(Epe {
        per_point: sum / n as f64,
        per_track: track_sum / track_n as f64,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> TrackSet {
        let tracks: Vec<Vec<Vec3>> = (0..4)
            .map(|m| (0..5).map(|t| Vec3::new(m as f64, t as f64 * 0.1, 2.0 + m as f64)).collect())
            .collect();
        TrackSet::from_tracks(&tracks).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let gt = toy();
        assert_eq!(track_apd(&gt, &gt, &ApdThresholds::default()).unwrap(), 100.0);
        let e = track_epe(&gt, &gt).unwrap();
        assert_eq!((e.per_point, e.per_track), (0.0, 0.0));
    }

    #[test]
    fn boundary_distance_does_not_count() {
        // Every point off by exactly τ: strict `<` excludes all of them.
        let gt = toy();
        let mut pred = gt.clone();
        for p in &mut pred.points {
            p.x += 0.5;
        }
        let th = ApdThresholds::Absolute(vec![0.5]);
        assert_eq!(track_apd(&pred, &gt, &th).unwrap(), 0.0);
        let th = ApdThresholds::Absolute(vec![0.25, 0.5, 1.0, 2.0]);
        assert_eq!(track_apd(&pred, &gt, &th).unwrap(), 50.0);
    }

    #[test]
    fn depth_scaled_thresholds_follow_z() {
        let gt = TrackSet::from_tracks(&[vec![Vec3::new(0.0, 0.0, 1.0)], vec![Vec3::new(0.0, 0.0, 10.0)]]).unwrap();
        let mut pred = gt.clone();
        pred.points[0].x += 0.05;
        pred.points[1].x += 0.05;
        // τ = 0.01·z: 0.01 and 0.1; only the far point is within.
        let th = ApdThresholds::DepthScaled(vec![0.01]);
        assert_eq!(track_apd(&pred, &gt, &th).unwrap(), 50.0);
    }

    #[test]
    fn epe_aggregations_differ() {
        let gt = TrackSet::from_tracks(&[vec![Vec3::zeros(); 3], vec![Vec3::zeros(); 3]]).unwrap();
        let mut pred = gt.clone();
        pred.points[0] = Vec3::new(3.0, 0.0, 0.0);
        // Second track has only one jointly valid point with error 1.
        pred.points[3] = Vec3::new(1.0, 0.0, 0.0);
        pred.valid[4] = false;
        pred.valid[5] = false;
        let e = track_epe(&pred, &gt).unwrap();
        assert_eq!(e.points, 4);
        assert!((e.per_point - 1.0).abs() < 1e-15);
        assert!((e.per_track - 1.0).abs() < 1e-15);
        pred.points[1] = Vec3::new(3.0, 0.0, 0.0);
        let e = track_epe(&pred, &gt).unwrap();
        assert!((e.per_point - 7.0 / 4.0).abs() < 1e-15);
        assert!((e.per_track - (2.0 + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn brute_recount() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (m, t) = (16, 16);
        let gt_pts: Vec<Vec3> = (0..m * t)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(1.0..5.0)))
            .collect();
        let pred_pts: Vec<Vec3> = gt_pts
            .iter()
            .map(|p| p + Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 0.0))
            .collect();
        let gv: Vec<bool> = (0..m * t).map(|_| rng.random_bool(0.9)).collect();
        let pv: Vec<bool> = (0..m * t).map(|_| rng.random_bool(0.9)).collect();
        let gt = TrackSet::new(m, t, gt_pts.clone(), gv.clone()).unwrap();
        let pred = TrackSet::new(m, t, pred_pts.clone(), pv.clone()).unwrap();
        let taus = [0.01, 0.02, 0.04, 0.08, 0.16];
        let mut pct = 0.0;
        for tau in taus {
            let (mut hit, mut all) = (0, 0);
            for i in 0..m * t {
                if gv[i] && pv[i] {
                    all += 1;
                    let (dx, dy, dz) = (
                        pred_pts[i].x - gt_pts[i].x,
                        pred_pts[i].y - gt_pts[i].y,
                        pred_pts[i].z - gt_pts[i].z,
                    );
                    if (dx * dx + dy * dy + dz * dz).sqrt() < tau * gt_pts[i].z {
                        hit += 1;
                    }
                }
            }
            pct += 100.0 * hit as f64 / all as f64;
        }
        pct /= taus.len() as f64;
        assert!((track_apd(&pred, &gt, &ApdThresholds::default()).unwrap() - pct).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let gt = toy();
        let mut pred = gt.clone();
        pred.valid.iter_mut().for_each(|v| *v = false);
        assert_eq!(track_epe(&pred, &gt), Err(MetricsError::NoValid("track points")));
        let other = TrackSet::from_tracks(&[vec![Vec3::zeros(); 5]]).unwrap();
        assert!(matches!(track_apd(&other, &gt, &ApdThresholds::default()), Err(MetricsError::DimensionMismatch(_))));
        assert!(TrackSet::new(2, 2, vec![Vec3::zeros(); 3], vec![true; 4]).is_err());
    }

    proptest! {
        #[test]
        fn apd_monotone_in_threshold(
            errs in proptest::collection::vec(0.0f64..1.0, 1..40),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let n = errs.len();
            let gt = TrackSet::new(n, 1, vec![Vec3::zeros(); n], vec![true; n]).unwrap();
            let pred = TrackSet::new(n, 1, errs.iter().map(|&e| Vec3::new(e, 0.0, 0.0)).collect(), vec![true; n]).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let apd_lo = track_apd(&pred, &gt, &ApdThresholds::Absolute(vec![lo])).unwrap();
            let apd_hi = track_apd(&pred, &gt, &ApdThresholds::Absolute(vec![hi])).unwrap();
            prop_assert!(apd_lo <= apd_hi);
        }
    }
}
