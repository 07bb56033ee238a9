use std::fmt;
use std::sync::Arc;

use annulus_core::{mat, LiftPoint, Mat2};
use mapkit::{AnnulusMap, Primitive};
use rayon::prelude::*;

use crate::density::{DensityField, Domain};
use crate::solver::{DivergenceSolver, FlowField};
use crate::spectral::SpectralNeumannSolver;
use crate::{MoserError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoserOptions {
    /// RK4 steps over `t ∈ [0, 1]`.
    pub steps: u32,
    /// Pullback residual budget; `None` skips verification.
    pub tolerance: Option<f64>,
}

impl Default for MoserOptions {
    fn default() -> Self {
        Self { steps: 64, tolerance: Some(1e-5) }
    }
}

/// Time-one map of `v_t = −w/((1−t) + tρ)`.
///
/// On the square, points are confined to `[0,1]²` and the flow is only meaningful there.
#[derive(Clone)]
pub struct MoserFlow {
    field: Arc<dyn FlowField>,
    steps: u32,
    /// Sup of the pullback residual over the density nodes, when verified.
    pub residual: Option<f64>,
}

impl fmt::Debug for MoserFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MoserFlow").field("steps", &self.steps).field("residual", &self.residual).finish_non_exhaustive()
    }
}

impl MoserFlow {
    pub fn new(field: Arc<dyn FlowField>, steps: u32) -> Self {
        Self { field, steps: steps.max(1), residual: None }
    }

    pub fn field(&self) -> &Arc<dyn FlowField> {
        &self.field
    }

    /// Velocity and its Jacobian at time `t`.
    fn velocity(&self, t: f64, z: [f64; 2]) -> ([f64; 2], Mat2) {
        let (w, dw, rho, grad) = self.field.field_and_density(z[0], z[1]);
        let mu = (1.0 - t) + t * rho;
        let v = [-w[0] / mu, -w[1] / mu];
        let mut dv = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                dv[i][j] = -dw[i][j] / mu + w[i] * t * grad[j] / (mu * mu);
            }
        }
        (v, dv)
    }

    /// RK4 with the variational equation from `t0` to `t1`.
    fn integrate(&self, p: LiftPoint, t0: f64, t1: f64) -> (LiftPoint, Mat2) {
        let n = self.steps;
        let h = (t1 - t0) / n as f64;
        let mut z = [p.x, p.y];
        let mut jac = mat::IDENTITY;
        for s in 0..n {
            let t = t0 + s as f64 * h;
            let (k1, a1) = self.velocity(t, z);
            let (k2, a2) = self.velocity(t + 0.5 * h, [z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]]);
            let (k3, a3) = self.velocity(t + 0.5 * h, [z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]]);
            let (k4, a4) = self.velocity(t + h, [z[0] + h * k3[0], z[1] + h * k3[1]]);
            let j1 = a1;
            let j2 = mat::mul(&a2, &add(&mat::IDENTITY, &j1, 0.5 * h));
            let j3 = mat::mul(&a3, &add(&mat::IDENTITY, &j2, 0.5 * h));
            let j4 = mat::mul(&a4, &add(&mat::IDENTITY, &j3, h));
            let mut step = mat::IDENTITY;
            for (w, ji) in [(1.0, j1), (2.0, j2), (2.0, j3), (1.0, j4)] {
                step = add(&step, &ji, h * w / 6.0);
            }
            jac = mat::mul(&step, &jac);
            for i in 0..2 {
                z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (LiftPoint::new(z[0], z[1]), jac)
    }

    pub fn forward(&self, p: LiftPoint) -> (LiftPoint, Mat2) {
        self.integrate(p, 0.0, 1.0)
    }

    /// Backward flow polished by Newton on the discrete forward map.
    pub fn backward(&self, p: LiftPoint) -> LiftPoint {
        let (mut z, _) = self.integrate(p, 1.0, 0.0);
        for _ in 0..8 {
            let (fz, j) = self.forward(z);
            let r = [fz.x - p.x, fz.y - p.y];
            if r[0].abs().max(r[1].abs()) < 1e-15 {
                break;
            }
            let d = mat::apply(&mat::inv(&j), r);
            z = LiftPoint::new(z.x - d[0], z.y - d[1]);
        }
        z
    }

    pub fn to_map(&self) -> AnnulusMap {
        AnnulusMap::from_prim(self.clone())
    }
}

fn add(a: &Mat2, b: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]], [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]]]
}

impl Primitive for MoserFlow {
    fn tag(&self) -> &'static str {
        "moser_flow"
    }

    fn apply(&self, p: LiftPoint) -> LiftPoint {
        if self.field.domain() == Domain::Annulus {
            let k = p.x.floor();
            let (q, _) = self.forward(LiftPoint::new(p.x - k, p.y));
            LiftPoint::new(q.x + k, q.y)
        } else {
            self.forward(p).0
        }
    }

    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        if self.field.domain() == Domain::Annulus {
            let k = p.x.floor();
            let q = self.backward(LiftPoint::new(p.x - k, p.y));
            LiftPoint::new(q.x + k, q.y)
        } else {
            self.backward(p)
        }
    }

    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        let k = if self.field.domain() == Domain::Annulus { p.x.floor() } else { 0.0 };
        self.forward(LiftPoint::new(p.x - k, p.y)).1
    }

    fn closed_form(&self) -> bool {
        true
    }
}

/// Sup over `points` of `|ρ(h(x))·det Dh(x) − 1|` for a caller-supplied density.
pub fn pullback_residual<R: Fn(f64, f64) -> f64 + Sync>(flow: &MoserFlow, points: &[LiftPoint], rho: R) -> Result<f64> {
    points
        .par_iter()
        .map(|&p| {
            let (q, j) = flow.forward(p);
            let r = (rho(q.x, q.y) * mat::det(&j) - 1.0).abs();
            if r.is_finite() && q.x.is_finite() && q.y.is_finite() {
                Ok(r)
            } else {
                Err(MoserError::FlowBlowup { x: p.x, y: p.y })
            }
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn nodes(rho: &DensityField) -> Vec<LiftPoint> {
    (0..rho.ny)
        .flat_map(|j| (0..rho.nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let (x, y) = rho.node(i, j);
            LiftPoint::new(x, y)
        })
        .collect()
}

/// Spectral Moser map for `ρ`, verified at the density nodes.
pub fn moser_flow(rho: &DensityField, opts: MoserOptions) -> Result<MoserFlow> {
    moser_flow_with(&SpectralNeumannSolver, rho, opts)
}

pub fn moser_flow_with(solver: &dyn DivergenceSolver, rho: &DensityField, opts: MoserOptions) -> Result<MoserFlow> {
    let field = solver.solve(rho)?;
    let mut flow = MoserFlow::new(field, opts.steps);
    let pts = nodes(rho);
    let f = flow.field.clone();
    let res = pullback_residual(&flow, &pts, |x, y| f.density(x, y).0)?;
    flow.residual = Some(res);
    if let Some(tol) = opts.tolerance {
        if !(res < tol) {
            return Err(MoserError::VerificationFailure { residual: res, tol });
        }
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn unit_density_gives_identity() {
        let rho = DensityField::from_fn(Domain::Annulus, 16, 9, |_, _| 1.0);
        let h = moser_flow(&rho, MoserOptions::default()).unwrap();
        let p = LiftPoint::new(0.3, 0.7);
        assert_eq!(Primitive::apply(&h, p), p);
        assert_eq!(h.residual, Some(0.0));
    }

    #[test]
    fn single_mode_pullback() {
        let lam = |x: f64, _y: f64| 1.0 + 0.1 * (TAU * x).cos();
        let rho = DensityField::from_fn(Domain::Annulus, 64, 33, lam);
        let h = moser_flow(&rho, MoserOptions::default()).unwrap();
        assert!(h.residual.unwrap() < 1e-5);
        let pts: Vec<_> = (0..100).map(|i| LiftPoint::new(i as f64 * 0.0137, (i as f64 * 0.618).fract())).collect();
        assert!(pullback_residual(&h, &pts, lam).unwrap() < 1e-5);
        // Boundary circles are preserved.
        for i in 0..10 {
            let x = i as f64 / 10.0;
            assert!((Primitive::apply(&h, LiftPoint::new(x, 0.0)).y).abs() < 1e-14);
            assert!((Primitive::apply(&h, LiftPoint::new(x, 1.0)).y - 1.0).abs() < 1e-14);
        }
        let p = LiftPoint::new(1.37, 0.4);
        assert!(Primitive::apply_inverse(&h, Primitive::apply(&h, p)).dist(p) < 1e-13);
    }

    #[test]
    fn wild_density_fails_loudly() {
        let rho = DensityField::from_fn(Domain::Annulus, 32, 17, |x, y| 1.0 + 0.995 * (TAU * 7.0 * x).cos() * (PI * 8.0 * y).cos());
        let r = moser_flow(&rho, MoserOptions::default());
        assert!(matches!(r, Err(MoserError::VerificationFailure { .. }) | Err(MoserError::FlowBlowup { .. })), "{r:?}");
    }
}
