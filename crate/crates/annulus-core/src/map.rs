use crate::geom::LiftPoint;

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub mod mat {
    use super::Mat2;

    pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

    pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ]
    }

    pub fn det(a: &Mat2) -> f64 {
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn inv(a: &Mat2) -> Mat2 {
        let d = det(a);
        [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
    }

    pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
        [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
    }

    pub fn scale(a: &Mat2, s: f64) -> Mat2 {
        [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
    }

    pub fn max_abs(a: &Mat2) -> f64 {
        a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Spectral norm.
    pub fn op_norm(a: &Mat2) -> f64 {
        let (p, q, r, s) = (a[0][0], a[0][1], a[1][0], a[1][1]);
        let t = p * p + q * q + r * r + s * s;
        let d = det(a);
        let disc = (t * t - 4.0 * d * d).max(0.0).sqrt();
        ((t + disc) / 2.0).sqrt()
    }

    pub fn apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
        [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
    }
}

/// A homeomorphism of the annulus presented through a distinguished lift.
///
/// Implementors must commute with the deck transformation: `F(x+1, y) = F(x, y) + (1, 0)`.
pub trait LiftMap: Send + Sync {
    fn apply(&self, p: LiftPoint) -> LiftPoint;

    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint;

    /// Closed-form Jacobian, when one is available.
    fn jacobian(&self, _p: LiftPoint) -> Option<Mat2> {
        None
    }

    fn inverse_jacobian(&self, p: LiftPoint) -> Option<Mat2> {
        self.jacobian(self.apply_inverse(p)).map(|j| mat::inv(&j))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl LiftMap for IdentityMap {
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        p
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        p
    }
    fn jacobian(&self, _p: LiftPoint) -> Option<Mat2> {
        Some(mat::IDENTITY)
    }
}

/// Adapter turning a pair of closures into a [`LiftMap`] without Jacobian.
pub struct FnMap<F, G> {
    pub forward: F,
    pub backward: G,
}

impl<F, G> LiftMap for FnMap<F, G>
where
    F: Fn(LiftPoint) -> LiftPoint + Send + Sync,
    G: Fn(LiftPoint) -> LiftPoint + Send + Sync,
{
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        (self.forward)(p)
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        (self.backward)(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_helpers() {
        let a: Mat2 = [[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(mat::det(&a), -2.0);
        let p = mat::mul(&a, &mat::inv(&a));
        assert!(mat::max_abs(&mat::sub(&p, &mat::IDENTITY)) < 1e-15);
        let rot: Mat2 = [[0.6, -0.8], [0.8, 0.6]];
        assert!((mat::op_norm(&rot) - 1.0).abs() < 1e-15);
        assert!((mat::op_norm(&[[3.0, 0.0], [0.0, -5.0]]) - 5.0).abs() < 1e-14);
    }
}
