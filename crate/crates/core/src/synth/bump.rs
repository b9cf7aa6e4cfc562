use std::sync::OnceLock;

use crate::error::{invalid, Result};
use crate::geom::PointCloud;

/// The bump `psi(s) = exp(1 - 1/(1 - s^2))` on `(-1, 1)`, zero elsewhere.
///
/// Even, smooth, positive inside its support, decreasing on `[0, 1]`, with `psi(0) = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BumpProfile;

impl BumpProfile {
    pub fn value(&self, s: f64) -> f64 {
        let q = 1.0 - s * s;
        if q <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / q).exp()
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let q = 1.0 - s * s;
        if q <= 0.0 {
            0.0
        } else {
            self.value(s) * (-2.0 * s / (q * q))
        }
    }

    /// `psi''(0)` by a five-point central difference, computed once.
    pub fn second_derivative_at_zero(&self) -> f64 {
        static CACHE: OnceLock<f64> = OnceLock::new();
        *CACHE.get_or_init(|| {
            let h = 1e-3;
            let f = |s: f64| self.value(s);
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
        })
    }

    /// An upper bound on `sup |psi'|`, from a fine scan with a small safety margin.
    pub fn max_slope(&self) -> f64 {
        static CACHE: OnceLock<f64> = OnceLock::new();
        *CACHE.get_or_init(|| {
            let steps = 100_000;
            let m = (1..steps)
                .map(|i| self.derivative(i as f64 / steps as f64).abs())
                .fold(0.0, f64::max);
            m * 1.001
        })
    }
}

/// `psi(s)` and `psi''(0)`.
pub fn bump_profile(s: f64) -> (f64, f64) {
    let psi = BumpProfile;
    (psi.value(s), psi.second_derivative_at_zero())
}

/// Applies `z -> z + gamma^k psi(|z| / gamma) e_last` to every point.
///
/// The last coordinate is the bump direction and the apex sits over the origin. Points
/// with `|z| >= gamma` are returned unchanged.
pub fn perturb_bump(cloud: &PointCloud, gamma: f64, k: u32, psi: &BumpProfile) -> Result<PointCloud> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return invalid(format!("bump width must be positive, got {gamma}"));
    }
    if cloud.dim() < 2 {
        return invalid("the bump needs at least two ambient dimensions");
    }
    let dim = cloud.dim();
    let amp = gamma.powi(k as i32);
    let mut data = cloud.as_flat().to_vec();
    for p in data.chunks_exact_mut(dim) {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        p[dim - 1] += amp * psi.value(norm / gamma);
    }
    PointCloud::new(dim, data)
}

/// Area distortion of the bump map restricted to the sphere of radius `r` centred at the
/// origin, evaluated at a sphere point `z`, with the apex at `r e_last`.
///
/// For the map `x -> x + g(x) e` on a hypersurface with unit normal `n`, the Gram
/// determinant of the tangential differential is
/// `(1 + <a_T, e_T>)^2 + |a_T|^2 (n . e)^2` where `a = grad g` and `_T` denotes the
/// tangential part.
pub(crate) fn sphere_jacobian(z: &[f64], r: f64, gamma: f64, k: u32, psi: &BumpProfile) -> f64 {
    let dim = z.len();
    let last = dim - 1;
    let mut norm2 = 0.0;
    for (i, &x) in z.iter().enumerate() {
        let d = if i == last { x - r } else { x };
        norm2 += d * d;
    }
    let norm = norm2.sqrt();
    let s = norm / gamma;
    if s >= 1.0 || norm == 0.0 {
        return 1.0;
    }
    // grad g = gamma^(k-1) psi'(s) z' / |z'| with z' = z - r e.
    let slope = gamma.powi(k as i32 - 1) * psi.derivative(s) / norm;
    let a = |i: usize| slope * if i == last { z[i] - r } else { z[i] };
    let n = |i: usize| z[i] / r;
    let a_n: f64 = (0..dim).map(|i| a(i) * n(i)).sum();
    let a_a: f64 = (0..dim).map(|i| a(i) * a(i)).sum();
    let e_n = n(last);
    let cross = a(last) - a_n * e_n;
    let a_t2 = a_a - a_n * a_n;
    ((1.0 + cross).powi(2) + a_t2 * e_n * e_n).sqrt()
}

/// Upper bound on [`sphere_jacobian`].
pub(crate) fn jacobian_bound(gamma: f64, k: u32, psi: &BumpProfile) -> f64 {
    let g = gamma.powi(k as i32 - 1) * psi.max_slope();
    ((1.0 + g).powi(2) + g * g).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let psi = BumpProfile;
        assert_eq!(psi.value(0.0), 1.0);
        for s in [1.0, -1.0, 2.0, -2.0] {
            assert_eq!(psi.value(s), 0.0);
        }
        assert_eq!(psi.value(0.3), psi.value(-0.3));
        let mut last = 1.0;
        for i in 1..100 {
            let v = psi.value(i as f64 / 100.0);
            assert!(v > 0.0 && v < last);
            last = v;
        }
    }

    #[test]
    fn second_derivative_is_minus_two() {
        let (v, c) = bump_profile(0.0);
        assert_eq!(v, 1.0);
        assert!((c + 2.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn derivative_matches_differences() {
        let psi = BumpProfile;
        for s in [-0.7, -0.2, 0.1, 0.5, 0.9] {
            let h = 1e-6;
            let fd = (psi.value(s + h) - psi.value(s - h)) / (2.0 * h);
            assert!((fd - psi.derivative(s)).abs() < 1e-6);
        }
        assert!(psi.max_slope() >= psi.derivative(-0.5).abs());
    }

    #[test]
    fn perturb_examples() {
        let psi = BumpProfile;
        let c = PointCloud::from_rows(&[vec![0.0, 0.0], vec![0.4, 0.0], vec![0.0, 0.2]]).unwrap();
        let out = perturb_bump(&c, 0.2, 3, &psi).unwrap();
        assert_eq!(out.point(0), &[0.0, 0.2f64.powi(3)]);
        assert_eq!(out.point(1), c.point(1));
        assert_eq!(out.point(2), c.point(2));
        let half = perturb_bump(&c, 0.1, 3, &psi).unwrap();
        assert!((half.point(0)[1] * 8.0 - out.point(0)[1]).abs() < 1e-15);
        assert!(perturb_bump(&c, 0.0, 3, &psi).is_err());
        let line = PointCloud::from_rows(&[vec![0.0]]).unwrap();
        assert!(perturb_bump(&line, 0.1, 3, &psi).is_err());
    }

    #[test]
    fn jacobian_is_one_outside_and_bounded_inside() {
        let psi = BumpProfile;
        let (gamma, k) = (0.3, 3);
        let bound = jacobian_bound(gamma, k, &psi);
        assert_eq!(sphere_jacobian(&[0.0, -1.0], 1.0, gamma, k, &psi), 1.0);
        for i in 0..1000 {
            let a = std::f64::consts::FRAC_PI_2 + (i as f64 / 1000.0 - 0.5) * 0.8;
            let j = sphere_jacobian(&[a.cos(), a.sin()], 1.0, gamma, k, &psi);
            assert!(j > 0.0 && j <= bound);
        }
    }

    #[test]
    fn jacobian_matches_curve_speed() {
        // On the unit circle the distortion is the speed of the image curve.
        let psi = BumpProfile;
        let (gamma, k) = (0.3f64, 3);
        let image = |a: f64| {
            let z = [a.cos(), a.sin()];
            let zp = [z[0], z[1] - 1.0];
            let norm = (zp[0] * zp[0] + zp[1] * zp[1]).sqrt();
            [z[0], z[1] + gamma.powi(3) * psi.value(norm / gamma)]
        };
        for a in [1.35, 1.45, 1.5, 1.6, 1.7] {
            let h = 1e-6;
            let (p, q) = (image(a - h), image(a + h));
            let speed = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() / (2.0 * h);
            let j = sphere_jacobian(&[a.cos(), a.sin()], 1.0, gamma, k, &psi);
            assert!((speed - j).abs() < 1e-6, "{a}: {speed} vs {j}");
        }
    }
}
