use crate::geometry::Vec3;

/// Closest point on triangle `abc` to `p`, as barycentric weights over
/// `(a, b, c)` together with the point itself.
///
/// Closed-form Voronoi-region classification (three vertex regions, three
/// edge regions, interior); the weights are always in the simplex.
pub fn closest_point_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> ([f64; 3], Vec3) {
    let [a, b, c] = tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ([1.0, 0.0, 0.0], *a);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return ([0.0, 1.0, 0.0], *b);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return finish([1.0 - v, v, 0.0], p, tri);
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return ([0.0, 0.0, 1.0], *c);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return finish([1.0 - w, 0.0, w], p, tri);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return finish([0.0, 1.0 - w, w], p, tri);
    }

    let denom = va + vb + vc;
    if !(denom > 0.0) || !denom.is_finite() {
        return degenerate(p, tri);
    }
    let v = vb / denom;
    let w = vc / denom;
    finish([(1.0 - v - w).max(0.0), v, w], p, tri)
}

fn finish(alpha: [f64; 3], p: &Vec3, tri: &[Vec3; 3]) -> ([f64; 3], Vec3) {
    if !alpha.iter().all(|a| a.is_finite()) {
        return degenerate(p, tri);
    }
    let p = tri[0] * alpha[0] + tri[1] * alpha[1] + tri[2] * alpha[2];
    (alpha, p)
}

/// Collapsed triangles: best of the three edge segments.
fn degenerate(p: &Vec3, tri: &[Vec3; 3]) -> ([f64; 3], Vec3) {
    let mut best = ([1.0, 0.0, 0.0], tri[0], (p - tri[0]).norm_squared());
    for (i, j) in [(0usize, 1usize), (1, 2), (0, 2)] {
        let d = tri[j] - tri[i];
        let len2 = d.norm_squared();
        let s = if len2 > 0.0 {
            ((p - tri[i]).dot(&d) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = tri[i] + d * s;
        let dist = (p - q).norm_squared();
        if dist < best.2 {
            let mut alpha = [0.0; 3];
            alpha[i] = 1.0 - s;
            alpha[j] = s;
            best = (alpha, q, dist);
        }
    }
    (best.0, best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri() -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.5),
        ]
    }

    #[test]
    fn vertices_and_centroid() {
        let t = tri();
        for (k, v) in t.iter().enumerate() {
            let (alpha, q) = closest_point_on_triangle(v, &t);
            assert_eq!(q, *v);
            assert_eq!(alpha[k], 1.0);
        }
        let c = (t[0] + t[1] + t[2]) / 3.0;
        let (alpha, q) = closest_point_on_triangle(&c, &t);
        assert!((q - c).norm() < 1e-12);
        for a in alpha {
            assert!((a - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_projection_of_offset_point() {
        let t = tri();
        let n = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
        let inside = t[0] * 0.5 + t[1] * 0.3 + t[2] * 0.2;
        let (alpha, q) = closest_point_on_triangle(&(inside + n * 0.7), &t);
        assert!((q - inside).norm() < 1e-12);
        assert!((alpha[0] - 0.5).abs() < 1e-12 && (alpha[1] - 0.3).abs() < 1e-12);
    }

    /// Dense sampling of the triangle is an independent upper bound on the
    /// true distance; the closed form must never be worse.
    #[test]
    fn never_worse_than_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = tri();
        for _ in 0..200 {
            let p = Vec3::new(
                rng.random_range(-2.0..4.0),
                rng.random_range(-2.0..3.0),
                rng.random_range(-2.0..2.0),
            );
            let (alpha, q) = closest_point_on_triangle(&p, &t);
            assert!(alpha.iter().all(|a| *a >= 0.0));
            assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let d = (p - q).norm();
            let n = 60;
            let mut best = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let a = i as f64 / n as f64;
                    let b = j as f64 / n as f64;
                    let s = t[0] * (1.0 - a - b) + t[1] * a + t[2] * b;
                    best = best.min((p - s).norm());
                }
            }
            assert!(d <= best + 1e-12, "closed form {d} vs sampled {best}");
            assert!(best - d < 0.05);
        }
    }

    #[test]
    fn collapsed_triangle_falls_back_to_segments() {
        let t = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let (alpha, q) = closest_point_on_triangle(&Vec3::new(1.5, 1.0, 0.0), &t);
        assert!((q - Vec3::new(1.5, 0.0, 0.0)).norm() < 1e-12);
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let z = [Vec3::zeros(); 3];
        let (alpha, q) = closest_point_on_triangle(&Vec3::x(), &z);
        assert_eq!(q, Vec3::zeros());
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
