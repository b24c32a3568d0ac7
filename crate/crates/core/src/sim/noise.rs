//! Seeded one-dimensional gradient (Perlin) noise and the camera shake built on it.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{look_at_rotation, Vec3};

const LATTICE: usize = 256;

/// Upper bound of `|noise(x)|` for unit gradients in one dimension,
/// reached at half-integer `x` when neighbouring gradients have opposite signs.
pub const NOISE_BOUND: f64 = 0.5;

/// Classic gradient noise on the integer lattice with random slopes in
/// `[-1, 1]`, blended with the quintic fade curve (C² continuous).
#[derive(Clone, Debug)]
pub struct GradientNoise {
    slopes: Vec<f64>,
}

impl GradientNoise {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            slopes: (0..LATTICE).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        }
    }

    fn slope(&self, i: i64) -> f64 {
        self.slopes[i.rem_euclid(LATTICE as i64) as usize]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = x.floor();
        let f = x - i;
        let i = i as i64;
        let a = self.slope(i) * f;
        let b = self.slope(i + 1) * (f - 1.0);
        a + fade(f) * (b - a)
    }
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Three independent noise channels, one per camera-local axis.
#[derive(Clone, Debug)]
pub struct NoiseVec3([GradientNoise; 3]);

impl NoiseVec3 {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self([
            GradientNoise::new(rng.random()),
            GradientNoise::new(rng.random()),
            GradientNoise::new(rng.random()),
        ])
    }

    pub fn eval(&self, x: f64) -> Vec3 {
        Vec3::new(self.0[0].eval(x), self.0[1].eval(x), self.0[2].eval(x))
    }
}

/// Camera placement before orientation is derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LookAtPose {
    pub eye: Vec3,
    pub target: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShakeSpec {
    /// Peak offset scale of the camera centre, scene units.
    pub position_amplitude: f64,
    /// Peak offset scale of the look-at target, scene units.
    pub target_amplitude: f64,
    /// Noise lattice cells per frame.
    pub frequency: f64,
    pub seed: u64,
}

impl ShakeSpec {
    pub const NONE: ShakeSpec = ShakeSpec {
        position_amplitude: 0.0,
        target_amplitude: 0.0,
        frequency: 0.0,
        seed: 0,
    };
}

/// Adds smooth noise offsets, in each base pose's camera-local axes, to the
/// eye and to the target. Offsets vanish at frame 0 because the noise is
/// zero on lattice points.
pub fn perlin_shake(base: &[LookAtPose], shake: &ShakeSpec, up: Vec3) -> Vec<LookAtPose> {
    if shake.position_amplitude == 0.0 && shake.target_amplitude == 0.0 {
        return base.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shake.seed);
    let eye_noise = NoiseVec3::new(rng.random());
    let target_noise = NoiseVec3::new(rng.random());
    base.iter()
        .enumerate()
        .map(|(k, pose)| {
            let x = k as f64 * shake.frequency;
            // Camera-local axes; fall back to world axes for degenerate poses.
            let to_world = look_at_rotation(pose.eye, pose.target, up)
                .map(|r| r.transpose())
                .unwrap_or_else(|_| nalgebra::Matrix3::identity());
            LookAtPose {
                eye: pose.eye + to_world * (eye_noise.eval(x) * shake.position_amplitude),
                target: pose.target + to_world * (target_noise.eval(x) * shake.target_amplitude),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_on_lattice() {
        let n = GradientNoise::new(42);
        for i in -300..300 {
            assert_eq!(n.eval(i as f64), 0.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = GradientNoise::new(1);
        let b = GradientNoise::new(1);
        let c = GradientNoise::new(2);
        assert_eq!(a.eval(3.7), b.eval(3.7));
        assert_ne!(a.eval(3.7), c.eval(3.7));
    }

    #[test]
    fn bounded_over_dense_sweep() {
        let n = GradientNoise::new(7);
        let mut max = 0.0f64;
        for k in 0..10_000 {
            let x = k as f64 * 0.0373 - 50.0;
            max = max.max(n.eval(x).abs());
        }
        assert!(max <= NOISE_BOUND);
        assert!(max > 0.1);
    }

    #[test]
    fn continuous_first_derivative_across_cells() {
        let n = GradientNoise::new(3);
        let h = 1e-6;
        for i in 1..20 {
            let x = i as f64;
            let left = (n.eval(x) - n.eval(x - h)) / h;
            let right = (n.eval(x + h) - n.eval(x)) / h;
            assert!((left - right).abs() < 1e-4, "kink at {x}: {left} vs {right}");
            // The derivative at a lattice point is the stored slope.
            assert!((right - n.slope(i)).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let base: Vec<LookAtPose> = (0..10)
            .map(|k| LookAtPose {
                eye: Vec3::new(k as f64, 2.0, 1.0),
                target: Vec3::zeros(),
            })
            .collect();
        let shaken = perlin_shake(
            &base,
            &ShakeSpec {
                frequency: 0.3,
                seed: 9,
                ..ShakeSpec::NONE
            },
            Vec3::z(),
        );
        assert_eq!(shaken, base);
    }

    #[test]
    fn offsets_respect_amplitude_bound() {
        let base = vec![
            LookAtPose {
                eye: Vec3::new(3.0, 0.0, 1.0),
                target: Vec3::zeros(),
            };
            10_000
        ];
        let spec = ShakeSpec {
            position_amplitude: 0.05,
            target_amplitude: 0.02,
            frequency: 0.173,
            seed: 5,
        };
        let shaken = perlin_shake(&base, &spec, Vec3::z());
        assert_eq!(shaken[0], base[0]);
        let bound_eye = spec.position_amplitude * NOISE_BOUND * 3f64.sqrt();
        let bound_target = spec.target_amplitude * NOISE_BOUND * 3f64.sqrt();
        let mut max_axis = 0.0f64;
        for (s, b) in shaken.iter().zip(&base) {
            assert!((s.eye - b.eye).norm() <= bound_eye + 1e-12);
            assert!((s.target - b.target).norm() <= bound_target + 1e-12);
            let r = look_at_rotation(b.eye, b.target, Vec3::z()).unwrap();
            let local = r * (s.eye - b.eye);
            max_axis = max_axis.max(local.amax());
        }
        assert!(max_axis <= spec.position_amplitude * NOISE_BOUND + 1e-12);
    }
}
