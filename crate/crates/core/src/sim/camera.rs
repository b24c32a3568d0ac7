//! Camera motion specs, keyframed spherical trajectories and multi-camera rigs.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use super::noise::{perlin_shake, LookAtPose, ShakeSpec};
use super::SimError;
use crate::geometry::{CameraParams, Intrinsics, Vec3};

pub const HFOV_MIN_DEG: f64 = 39.6;
pub const HFOV_MAX_DEG: f64 = 90.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Static,
    /// Lateral translation with fixed orientation.
    Tracking,
    /// Radial motion only.
    Dolly,
    Orbit,
}

/// Cumulative offset from the initial spherical pose, reached at normalized time `time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub time: f64,
    #[serde(default)]
    pub d_radius: f64,
    #[serde(default)]
    pub d_polar_deg: f64,
    #[serde(default)]
    pub d_azimuth_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraMotionSpec {
    pub kind: MotionKind,
    pub radius: f64,
    /// Angle from +z.
    pub polar_deg: f64,
    /// Angle from +x towards +y.
    pub azimuth_deg: f64,
    #[serde(default)]
    pub keyframes: Vec<Keyframe>,
    /// Tracking shots: distance travelled along the camera's right axis.
    #[serde(default)]
    pub truck: f64,
    pub shake: ShakeSpec,
    pub hfov_deg: f64,
}

impl CameraMotionSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if !(HFOV_MIN_DEG..=HFOV_MAX_DEG).contains(&self.hfov_deg) {
            return bad(format!(
                "hfov {} outside [{HFOV_MIN_DEG}, {HFOV_MAX_DEG}]",
                self.hfov_deg
            ));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius {} must be positive", self.radius));
        }
        if !self.polar_deg.is_finite() || !self.azimuth_deg.is_finite() || !self.truck.is_finite() {
            return bad("non-finite spherical parameters".into());
        }
        if self.shake.position_amplitude < 0.0 || self.shake.target_amplitude < 0.0 {
            return bad("shake amplitude must be non-negative".into());
        }
        let mut prev = f64::NEG_INFINITY;
        for k in &self.keyframes {
            if !(0.0..=1.0).contains(&k.time) {
                return bad(format!("keyframe time {} outside [0, 1]", k.time));
            }
            if k.time <= prev {
                return bad("keyframe times must be strictly increasing".into());
            }
            prev = k.time;
        }
        Ok(())
    }

    /// Offsets interpolated linearly between keyframes at normalized time `tau`;
    /// an implicit zero keyframe sits at `tau = 0` and the last one holds.
    pub fn deltas_at(&self, tau: f64) -> (f64, f64, f64) {
        let mut prev = Keyframe {
            time: 0.0,
            d_radius: 0.0,
            d_polar_deg: 0.0,
            d_azimuth_deg: 0.0,
        };
        for k in &self.keyframes {
            if tau <= k.time {
                let span = k.time - prev.time;
                let s = if span > 0.0 { (tau - prev.time) / span } else { 1.0 };
                let lerp = |a: f64, b: f64| a + (b - a) * s;
                return (
                    lerp(prev.d_radius, k.d_radius),
                    lerp(prev.d_polar_deg, k.d_polar_deg),
                    lerp(prev.d_azimuth_deg, k.d_azimuth_deg),
                );
            }
            prev = *k;
        }
        (prev.d_radius, prev.d_polar_deg, prev.d_azimuth_deg)
    }

    /// Spherical coordinates (r, θ°, φ°) at normalized time, before shake.
    pub fn spherical_at(&self, tau: f64) -> (f64, f64, f64) {
        let (dr, dt, dp) = self.deltas_at(tau);
        match self.kind {
            MotionKind::Static | MotionKind::Tracking => (self.radius, self.polar_deg, self.azimuth_deg),
            MotionKind::Dolly => (self.radius + dr, self.polar_deg, self.azimuth_deg),
            MotionKind::Orbit => (self.radius + dr, self.polar_deg + dt, self.azimuth_deg + dp),
        }
    }
}

pub fn spherical_to_cartesian(root: Vec3, r: f64, polar_deg: f64, azimuth_deg: f64) -> Vec3 {
    let (th, ph) = (polar_deg.to_radians(), azimuth_deg.to_radians());
    root + r * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
}

/// Normalized time of frame `k` out of `frames`.
fn tau(k: usize, frames: usize) -> f64 {
    if frames <= 1 {
        0.0
    } else {
        k as f64 / (frames - 1) as f64
    }
}

/// Look-at poses before shake.
pub fn base_poses(spec: &CameraMotionSpec, frames: usize, root: Vec3) -> Vec<LookAtPose> {
    let start = spherical_to_cartesian(root, spec.radius, spec.polar_deg, spec.azimuth_deg);
    // Tracking moves along the initial right axis, which is horizontal for a z-up look-at.
    let right = (root - start).cross(&Vec3::z()).try_normalize(1e-12).unwrap_or_else(Vec3::x);
    (0..frames)
        .map(|k| {
            let tau = tau(k, frames);
            let (r, th, ph) = spec.spherical_at(tau);
            let eye = spherical_to_cartesian(root, r, th, ph);
            match spec.kind {
                MotionKind::Tracking => {
                    let off = right * (spec.truck * tau);
                    LookAtPose {
                        eye: eye + off,
                        target: root + off,
                    }
                }
                _ => LookAtPose { eye, target: root },
            }
        })
        .collect()
}

/// Keyframed trajectory with shake, one camera per frame.
pub fn sample_trajectory(
    spec: &CameraMotionSpec,
    frames: usize,
    root: Vec3,
    width: u32,
    height: u32,
) -> Result<Vec<CameraParams>, SimError> {
    spec.validate()?;
    let intr = Intrinsics::from_hfov(width, height, spec.hfov_deg);
    let poses = perlin_shake(&base_poses(spec, frames, root), &spec.shake, Vec3::z());
    poses
        .iter()
        .map(|p| CameraParams::look_at(intr, p.eye, p.target, Vec3::z()).map_err(SimError::from))
        .collect()
}

/// Sampling ranges for randomly drawn shots. Angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionRanges {
    pub radius: [f64; 2],
    pub polar_deg: [f64; 2],
    /// Magnitudes; signs are random.
    pub d_radius: [f64; 2],
    pub d_polar_deg: [f64; 2],
    pub d_azimuth_deg: [f64; 2],
    /// Kept inside this band by flipping the sign of the drawn delta.
    pub radius_limits: [f64; 2],
    pub polar_limits_deg: [f64; 2],
    pub hfov_deg: [f64; 2],
    pub position_shake: [f64; 2],
    pub target_shake: [f64; 2],
    pub shake_frequency: [f64; 2],
    /// Share of independent shots that are orbits; the rest are dollies.
    pub orbit_probability: f64,
    /// Optional interior keyframes per shot (0 gives a single end keyframe).
    pub interior_keyframes: u32,
}

impl Default for MotionRanges {
    fn default() -> Self {
        Self {
            radius: [4.0, 6.5],
            polar_deg: [50.0, 80.0],
            d_radius: [1.0, 4.0],
            d_polar_deg: [10.0, 40.0],
            d_azimuth_deg: [120.0, 360.0],
            radius_limits: [3.0, 10.5],
            polar_limits_deg: [15.0, 88.0],
            hfov_deg: [HFOV_MIN_DEG, HFOV_MAX_DEG],
            position_shake: [0.0, 0.03],
            target_shake: [0.0, 0.03],
            shake_frequency: [0.05, 0.25],
            orbit_probability: 0.75,
            interior_keyframes: 1,
        }
    }
}

impl MotionRanges {
    pub fn validate(&self) -> Result<(), SimError> {
        let pairs = [
            ("radius", self.radius),
            ("polar_deg", self.polar_deg),
            ("d_radius", self.d_radius),
            ("d_polar_deg", self.d_polar_deg),
            ("d_azimuth_deg", self.d_azimuth_deg),
            ("radius_limits", self.radius_limits),
            ("polar_limits_deg", self.polar_limits_deg),
            ("hfov_deg", self.hfov_deg),
            ("position_shake", self.position_shake),
            ("target_shake", self.target_shake),
            ("shake_frequency", self.shake_frequency),
        ];
        for (name, [lo, hi]) in pairs {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(SimError::InvalidSpec(format!("range {name} = [{lo}, {hi}] is empty")));
            }
        }
        if self.hfov_deg[0] < HFOV_MIN_DEG || self.hfov_deg[1] > HFOV_MAX_DEG {
            return Err(SimError::InvalidSpec("hfov range exceeds [39.6, 90]".into()));
        }
        if self.radius[0] <= 0.0 || self.radius_limits[0] <= 0.0 {
            return Err(SimError::InvalidSpec("radii must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.orbit_probability) {
            return Err(SimError::InvalidSpec("orbit_probability outside [0, 1]".into()));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// A delta of magnitude drawn from `mag`, signed so `start + delta` stays in `limits` when possible.
fn signed_delta<R: Rng + ?Sized>(rng: &mut R, start: f64, mag: [f64; 2], limits: [f64; 2]) -> f64 {
    let d = uniform(rng, mag);
    let up_ok = start + d <= limits[1];
    let down_ok = start - d >= limits[0];
    match (up_ok, down_ok) {
        (true, false) => d,
        (false, true) => -d,
        _ => {
            if rng.random_bool(0.5) {
                d
            } else {
                -d
            }
        }
    }
}

fn sample_shake<R: Rng + ?Sized>(rng: &mut R, ranges: &MotionRanges) -> ShakeSpec {
    ShakeSpec {
        position_amplitude: uniform(rng, ranges.position_shake),
        target_amplitude: uniform(rng, ranges.target_shake),
        frequency: uniform(rng, ranges.shake_frequency),
        seed: rng.random(),
    }
}

/// Keyframes reaching the full deltas at `tau = 1`, with optional interior
/// keyframes at jittered fractions of the way.
fn sample_keyframes<R: Rng + ?Sized>(rng: &mut R, n_interior: u32, dr: f64, dt: f64, dp: f64) -> Vec<Keyframe> {
    let mut out = Vec::new();
    let n = n_interior as usize + 1;
    let mut prev_frac = 0.0;
    for i in 1..n {
        let nominal = i as f64 / n as f64;
        let time = nominal + rng.random_range(-0.25..0.25) / n as f64;
        let frac = (time + rng.random_range(-0.1..0.1)).clamp(prev_frac, 1.0);
        prev_frac = frac;
        out.push(Keyframe {
            time,
            d_radius: dr * frac,
            d_polar_deg: dt * frac,
            d_azimuth_deg: dp * frac,
        });
    }
    out.push(Keyframe {
        time: 1.0,
        d_radius: dr,
        d_polar_deg: dt,
        d_azimuth_deg: dp,
    });
    out
}

#[derive(Clone, Copy, Debug)]
struct StartPose {
    radius: f64,
    polar: f64,
    azimuth: f64,
    hfov: f64,
}

fn sample_start<R: Rng + ?Sized>(rng: &mut R, ranges: &MotionRanges) -> StartPose {
    StartPose {
        radius: uniform(rng, ranges.radius),
        polar: uniform(rng, ranges.polar_deg),
        azimuth: rng.random_range(0.0..360.0),
        hfov: uniform(rng, ranges.hfov_deg),
    }
}

fn moving_shot<R: Rng + ?Sized>(rng: &mut R, ranges: &MotionRanges, start: StartPose, kind: MotionKind) -> CameraMotionSpec {
    let dr = signed_delta(rng, start.radius, ranges.d_radius, ranges.radius_limits);
    let (dt, dp) = if kind == MotionKind::Orbit {
        let dt = signed_delta(rng, start.polar, ranges.d_polar_deg, ranges.polar_limits_deg);
        let dp = uniform(rng, ranges.d_azimuth_deg) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        (dt, dp)
    } else {
        (0.0, 0.0)
    };
    CameraMotionSpec {
        kind,
        radius: start.radius,
        polar_deg: start.polar,
        azimuth_deg: start.azimuth,
        keyframes: sample_keyframes(rng, ranges.interior_keyframes, dr, dt, dp),
        truck: 0.0,
        shake: sample_shake(rng, ranges),
        hfov_deg: start.hfov,
    }
}

/// Multi-camera layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigPattern {
    /// Every shot drawn independently (orbits and dollies).
    Independent,
    /// Consecutive pairs of orbits sharing their first frame.
    PairedOrbits,
    /// `C/2` static shots evenly spaced in azimuth, each the start of one orbit.
    FourStaticFourOrbits,
}

pub fn sample_rig<R: Rng + ?Sized>(
    pattern: RigPattern,
    cameras: usize,
    ranges: &MotionRanges,
    rng: &mut R,
) -> Result<Vec<CameraMotionSpec>, SimError> {
    ranges.validate()?;
    if cameras == 0 {
        return Err(SimError::InvalidSpec("a rig needs at least one camera".into()));
    }
    let specs = match pattern {
        RigPattern::Independent => (0..cameras)
            .map(|_| {
                let start = sample_start(rng, ranges);
                let kind = if rng.random_bool(ranges.orbit_probability) {
                    MotionKind::Orbit
                } else {
                    MotionKind::Dolly
                };
                moving_shot(rng, ranges, start, kind)
            })
            .collect(),
        RigPattern::PairedOrbits => {
            if !cameras.is_multiple_of(2) {
                return Err(SimError::InvalidSpec(format!("paired rig needs an even camera count, got {cameras}")));
            }
            let mut out = Vec::with_capacity(cameras);
            for _ in 0..cameras / 2 {
                let start = sample_start(rng, ranges);
                out.push(moving_shot(rng, ranges, start, MotionKind::Orbit));
                out.push(moving_shot(rng, ranges, start, MotionKind::Orbit));
            }
            out
        }
        RigPattern::FourStaticFourOrbits => {
            if !cameras.is_multiple_of(2) {
                return Err(SimError::InvalidSpec(format!(
                    "static-plus-orbit rig needs an even camera count, got {cameras}"
                )));
            }
            let half = cameras / 2;
            let first = sample_start(rng, ranges);
            let starts: Vec<StartPose> = (0..half)
                .map(|k| StartPose {
                    azimuth: (first.azimuth + 360.0 * k as f64 / half as f64).rem_euclid(360.0),
                    ..first
                })
                .collect();
            let mut out: Vec<CameraMotionSpec> = starts
                .iter()
                .map(|s| CameraMotionSpec {
                    kind: MotionKind::Static,
                    radius: s.radius,
                    polar_deg: s.polar,
                    azimuth_deg: s.azimuth,
                    keyframes: Vec::new(),
                    truck: 0.0,
                    shake: sample_shake(rng, ranges),
                    hfov_deg: s.hfov,
                })
                .collect();
            for s in &starts {
                out.push(moving_shot(rng, ranges, *s, MotionKind::Orbit));
            }
            out
        }
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orbit(dr: f64, dt: f64, dp: f64) -> CameraMotionSpec {
        CameraMotionSpec {
            kind: MotionKind::Orbit,
            radius: 5.0,
            polar_deg: 60.0,
            azimuth_deg: 30.0,
            keyframes: vec![Keyframe {
                time: 1.0,
                d_radius: dr,
                d_polar_deg: dt,
                d_azimuth_deg: dp,
            }],
            truck: 0.0,
            shake: ShakeSpec::NONE,
            hfov_deg: 60.0,
        }
    }

    #[test]
    fn static_shot_gives_identical_poses() {
        let mut s = orbit(0.0, 0.0, 0.0);
        s.kind = MotionKind::Static;
        s.keyframes[0].d_azimuth_deg = 90.0;
        let traj = sample_trajectory(&s, 12, Vec3::new(0.0, 0.0, 1.0), 32, 24).unwrap();
        assert!(traj.iter().all(|c| *c == traj[0]));
    }

    #[test]
    fn full_orbit_stays_on_sphere() {
        let root = Vec3::new(0.5, -0.2, 0.8);
        let s = orbit(0.0, 0.0, 360.0);
        let traj = sample_trajectory(&s, 50, root, 16, 16).unwrap();
        for c in &traj {
            assert!(((c.position - root).norm() - 5.0).abs() < 1e-6);
            // Looks at the root.
            let f = (root - c.position).normalize();
            assert!((c.forward() - f).norm() < 1e-9);
        }
        assert!((traj[0].position - traj[49].position).norm() < 1e-9);
    }

    #[test]
    fn radius_follows_keyframes() {
        let mut s = orbit(0.0, 10.0, 90.0);
        s.keyframes = vec![
            Keyframe { time: 0.5, d_radius: 2.0, d_polar_deg: 5.0, d_azimuth_deg: 45.0 },
            Keyframe { time: 1.0, d_radius: -1.0, d_polar_deg: 10.0, d_azimuth_deg: 90.0 },
        ];
        let root = Vec3::zeros();
        let traj = sample_trajectory(&s, 21, root, 16, 16).unwrap();
        for (k, c) in traj.iter().enumerate() {
            let tau = k as f64 / 20.0;
            let expect = if tau <= 0.5 { 5.0 + 4.0 * tau } else { 7.0 - 6.0 * (tau - 0.5) };
            assert!(((c.position - root).norm() - expect).abs() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = orbit(0.0, 0.0, 0.0);
        s.hfov_deg = 30.0;
        assert!(s.validate().is_err());
        let mut s = orbit(0.0, 0.0, 0.0);
        s.radius = 0.0;
        assert!(s.validate().is_err());
        let mut s = orbit(0.0, 0.0, 0.0);
        s.keyframes.push(Keyframe { time: 1.0, d_radius: 0.0, d_polar_deg: 0.0, d_azimuth_deg: 0.0 });
        assert!(s.validate().is_err());
    }

    #[test]
    fn camera_above_root_is_degenerate() {
        let mut s = orbit(0.0, 0.0, 0.0);
        s.polar_deg = 0.0;
        assert!(matches!(
            sample_trajectory(&s, 3, Vec3::zeros(), 8, 8),
            Err(SimError::Geometry(_))
        ));
    }

    #[test]
    fn dolly_moves_radially_only() {
        let mut s = orbit(2.0, 30.0, 90.0);
        s.kind = MotionKind::Dolly;
        let traj = sample_trajectory(&s, 5, Vec3::zeros(), 8, 8).unwrap();
        let dir0 = traj[0].position.normalize();
        for c in &traj {
            assert!((c.position.normalize() - dir0).norm() < 1e-9);
        }
        assert!((traj[4].position.norm() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn tracking_keeps_orientation() {
        let mut s = orbit(0.0, 0.0, 0.0);
        s.kind = MotionKind::Tracking;
        s.truck = 3.0;
        let traj = sample_trajectory(&s, 7, Vec3::zeros(), 8, 8).unwrap();
        for c in &traj {
            assert!((c.rotation - traj[0].rotation).norm() < 1e-9);
        }
        assert!(((traj[6].position - traj[0].position).norm() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn paired_rig_shares_first_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let specs = sample_rig(RigPattern::PairedOrbits, 8, &MotionRanges::default(), &mut rng).unwrap();
        assert_eq!(specs.len(), 8);
        for pair in specs.chunks(2) {
            let a = sample_trajectory(&pair[0], 10, Vec3::zeros(), 32, 32).unwrap();
            let b = sample_trajectory(&pair[1], 10, Vec3::zeros(), 32, 32).unwrap();
            assert_eq!(a[0], b[0]);
            assert_ne!(a[9], b[9]);
        }
        assert!(sample_rig(RigPattern::PairedOrbits, 3, &MotionRanges::default(), &mut rng).is_err());
    }

    #[test]
    fn static_plus_orbit_rig_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let specs = sample_rig(RigPattern::FourStaticFourOrbits, 8, &MotionRanges::default(), &mut rng).unwrap();
        for k in 0..4 {
            assert_eq!(specs[k].kind, MotionKind::Static);
            assert_eq!(specs[k + 4].kind, MotionKind::Orbit);
            let d = (specs[(k + 1) % 4].azimuth_deg - specs[k].azimuth_deg).rem_euclid(360.0);
            assert!((d - 90.0).abs() < 1e-9);
            let s = sample_trajectory(&specs[k], 4, Vec3::zeros(), 16, 16).unwrap();
            let o = sample_trajectory(&specs[k + 4], 4, Vec3::zeros(), 16, 16).unwrap();
            assert_eq!(s[0].position, o[0].position);
        }
    }

    #[test]
    fn sampled_hfov_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for pattern in [RigPattern::Independent, RigPattern::PairedOrbits, RigPattern::FourStaticFourOrbits] {
            for _ in 0..50 {
                for s in sample_rig(pattern, 8, &MotionRanges::default(), &mut rng).unwrap() {
                    let c = sample_trajectory(&s, 2, Vec3::zeros(), 64, 48).unwrap();
                    let h = c[0].hfov_deg();
                    assert!((HFOV_MIN_DEG - 1e-9..=HFOV_MAX_DEG + 1e-9).contains(&h));
                }
            }
        }
    }
}
