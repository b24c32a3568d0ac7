//! Closed-form least-squares similarity alignment (Umeyama).

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{Mat3, Vec3};

/// `x ↦ s·R·x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * (self.rotation * p) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Similarity) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.apply(&other.translation),
        }
    }
}

/// Similarity minimising `Σ ‖dst − (s·R·src + t)‖²`; `with_scale = false` fixes `s = 1`.
pub fn umeyama(src: &[Vec3], dst: &[Vec3], with_scale: bool) -> Result<Similarity, MetricsError> {
    if src.len() != dst.len() {
        return Err(MetricsError::LengthMismatch(src.len(), dst.len()));
    }
    let n = src.len();
    if n < 3 {
        return Err(MetricsError::Degenerate(format!("{n} correspondences, need at least 3")));
    }
    let inv_n = 1.0 / n as f64;
    let mu_s = src.iter().sum::<Vec3>() * inv_n;
    let mu_d = dst.iter().sum::<Vec3>() * inv_n;
    let mut cov = Mat3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s - mu_s, d - mu_d);
        cov += b * a.transpose();
        var_s += a.norm_squared();
    }
    cov *= inv_n;
    var_s *= inv_n;

    // Rank of the source spread decides collinearity independently of dst.
    let mut spread = Mat3::zeros();
    for s in src {
        let a = s - mu_s;
        spread += a * a.transpose();
    }
    let sv = spread.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sv.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= ev[0] * 1e-12 {
        return Err(MetricsError::Degenerate("source points are coincident or collinear".into()));
    }

    let svd = SVD::new(cov, true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let d = svd.singular_values;
    let mut sign = Vec3::new(1.0, 1.0, 1.0);
    if (u.determinant() * vt.determinant()) < 0.0 {
        // Flip the axis of the smallest singular value to avoid a reflection.
        let (imin, _) = d.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("3 values");
        sign[imin] = -1.0;
    }
    let rotation = u * Mat3::from_diagonal(&sign) * vt;
    let scale = if with_scale {
        d.component_mul(&sign).sum() / var_s
    } else {
        1.0
    };
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(MetricsError::Degenerate(format!("non-positive scale {scale}")));
    }
    let translation = mu_d - scale * (rotation * mu_s);
    Ok(Similarity {
        scale,
        rotation,
        translation,
    })
}

/// Root-mean-square distance between `dst` and aligned `src`.
pub fn alignment_rms(sim: &Similarity, src: &[Vec3], dst: &[Vec3]) -> f64 {
    let sum: f64 = src.iter().zip(dst).map(|(s, d)| (d - sim.apply(s)).norm_squared()).sum();
    (sum / src.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn identity_on_equal_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = points(&mut rng, 20);
        let s = umeyama(&p, &p, true).unwrap();
        assert!((s.scale - 1.0).abs() < 1e-12);
        assert!((s.rotation - Mat3::identity()).abs().max() < 1e-12);
        assert!(s.translation.norm() < 1e-12);
    }

    #[test]
    fn recovers_known_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let gt = points(&mut rng, 30);
            let axis = nalgebra::Unit::new_normalize(points(&mut rng, 1)[0]);
            let known = Similarity {
                scale: rng.random_range(0.2..5.0),
                rotation: *Rotation3::from_axis_angle(&axis, rng.random_range(-3.1..3.1)).matrix(),
                translation: points(&mut rng, 1)[0] * 10.0,
            };
            let pred: Vec<Vec3> = gt.iter().map(|p| known.apply(p)).collect();
            // Aligning pred onto gt must give the inverse.
            let s = umeyama(&pred, &gt, true).unwrap();
            let inv = known.inverse();
            assert!((s.scale - inv.scale).abs() < 1e-9);
            assert!((s.rotation - inv.rotation).abs().max() < 1e-9);
            assert!((s.translation - inv.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn handles_reflection_case() {
        // Planar points: the unconstrained optimum would be a reflection.
        let src = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let dst: Vec<Vec3> = src.iter().map(|p| Vec3::new(p.x, -p.y, p.z)).collect();
        let s = umeyama(&src, &dst, false).unwrap();
        assert!((s.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_alignment_residual_near_sigma() {
        // Monte-Carlo: isotropic noise of σ per axis leaves an RMS point
        // residual near σ√3, never above the rigid-only fit.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let gt = points(&mut rng, 2000);
        let known = Similarity {
            scale: 2.0,
            rotation: *Rotation3::from_euler_angles(0.3, -0.2, 1.0).matrix(),
            translation: Vec3::new(1.0, 2.0, 3.0),
        };
        let pred: Vec<Vec3> = gt
            .iter()
            .map(|p| known.apply(p) + Vec3::from_fn(|_, _| noise.sample(&mut rng)))
            .collect();
        let sim = umeyama(&pred, &gt, true).unwrap();
        let rms_sim = alignment_rms(&sim, &pred, &gt);
        // Noise of σ in pred is scaled by 1/s = 0.5 in gt units.
        let expect = 0.01 * 0.5 * 3f64.sqrt();
        assert!((rms_sim - expect).abs() < 0.1 * expect, "{rms_sim} vs {expect}");
        let rigid = umeyama(&pred, &gt, false).unwrap();
        assert!(rms_sim <= alignment_rms(&rigid, &pred, &gt));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let line: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(umeyama(&line, &line, true), Err(MetricsError::Degenerate(_))));
        let same = vec![Vec3::new(1.0, 1.0, 1.0); 4];
        assert!(matches!(umeyama(&same, &same, true), Err(MetricsError::Degenerate(_))));
        assert!(matches!(umeyama(&line[..2], &line[..2], true), Err(MetricsError::Degenerate(_))));
        assert!(matches!(umeyama(&line, &line[..3], true), Err(MetricsError::LengthMismatch(5, 3))));
    }
}
