//! Small dense-vector helpers shared by every module.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;

/// Inner product. Panics in debug builds if lengths differ.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Returns `a / ‖a‖`, or `None` when the norm is zero or not finite.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(a.iter().map(|x| x / n).collect())
}

/// Cosine similarity; zero if either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

/// Angle between two vectors in radians, clamped against rounding.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    libm::acos(cosine(a, b).clamp(-1.0, 1.0))
}

/// Uniform sample from the unit sphere in `dim` dimensions.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

/// Rotates the unit vector `center` by `theta` radians towards a uniformly
/// random orthogonal direction. The result is a unit vector at exactly
/// angle `theta` from `center` (for `dim >= 2`).
pub fn rotate_random<R: Rng + ?Sized>(rng: &mut R, center: &[f64], theta: f64) -> Vec<f64> {
    let dim = center.len();
    let ortho = loop {
        let r = random_unit(rng, dim);
        let proj = dot(&r, center);
        let v: Vec<f64> = r.iter().zip(center).map(|(x, c)| x - proj * c).collect();
        if let Some(u) = normalized(&v) {
            break u;
        }
    };
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let v: Vec<f64> = center.iter().zip(&ortho).map(|(a, b)| c * a + s * b).collect();
    normalized(&v).unwrap_or(v)
}
