use std::f64::consts::PI;
use std::sync::Arc;

use annulus_core::Mat2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::density::{DensityField, Domain};
use crate::hermite::HermiteField;
use crate::solver::{DivergenceSolver, FlowField};
use crate::{MoserError, Result};

/// Mean tolerance for the Neumann compatibility condition.
pub(crate) const MEAN_TOL: f64 = 1e-10;
/// Sup-norm budget for `div w − (ρ − 1)` at the nodes.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Even extension of the node grid to a doubly periodic torus.
///
/// `y` is always reflected about both boundaries; `x` is reflected on the
/// square and left periodic on the annulus. Neumann data of the original
/// problem become periodicity of the extension.
#[derive(Debug, Clone)]
pub(crate) struct Torus {
    domain: Domain,
    nx: usize,
    ny: usize,
    mx: usize,
    my: usize,
    /// Physical side lengths of the extended torus.
    lx: f64,
    ly: f64,
}

impl Torus {
    pub(crate) fn new(domain: Domain, nx: usize, ny: usize) -> Self {
        let (mx, lx) = match domain {
            Domain::Annulus => (nx, 1.0),
            Domain::Square => (2 * (nx - 1), 2.0),
        };
        Self { domain, nx, ny, mx, my: 2 * (ny - 1), lx, ly: 2.0 }
    }

    fn fold_x(&self, a: usize) -> usize {
        match self.domain {
            Domain::Annulus => a,
            Domain::Square => {
                if a < self.nx {
                    a
                } else {
                    self.mx - a
                }
            }
        }
    }

    fn fold_y(&self, b: usize) -> usize {
        if b < self.ny {
            b
        } else {
            self.my - b
        }
    }

    fn extend(&self, v: &[f64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.mx * self.my);
        for b in 0..self.my {
            let j = self.fold_y(b);
            for a in 0..self.mx {
                out.push(Complex64::new(v[j * self.nx + self.fold_x(a)], 0.0));
            }
        }
        out
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let mut planner = FftPlanner::new();
        let (fx, fy) = if inverse {
            (planner.plan_fft_inverse(self.mx), planner.plan_fft_inverse(self.my))
        } else {
            (planner.plan_fft_forward(self.mx), planner.plan_fft_forward(self.my))
        };
        for row in data.chunks_mut(self.mx) {
            fx.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.my];
        for a in 0..self.mx {
            for b in 0..self.my {
                col[b] = data[b * self.mx + a];
            }
            fy.process(&mut col);
            for b in 0..self.my {
                data[b * self.mx + a] = col[b];
            }
        }
    }

    fn freq(m: usize, a: usize) -> i64 {
        if a <= m / 2 {
            a as i64
        } else {
            a as i64 - m as i64
        }
    }

    /// Angular wavenumbers, `None` at a Nyquist index.
    fn wavenumbers(&self, a: usize, b: usize) -> (f64, f64, bool, bool) {
        let (kx, ky) = (Self::freq(self.mx, a), Self::freq(self.my, b));
        let nyq_x = self.mx % 2 == 0 && a == self.mx / 2;
        let nyq_y = self.my % 2 == 0 && b == self.my / 2;
        (2.0 * PI * kx as f64 / self.lx, 2.0 * PI * ky as f64 / self.ly, nyq_x, nyq_y)
    }

    pub(crate) fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        let mut d = self.extend(v);
        self.fft2(&mut d, false);
        d
    }

    /// Node values of `∂x^px ∂y^py` applied to the spectral function `hat`.
    pub(crate) fn derivative(&self, hat: &[Complex64], px: u32, py: u32) -> Vec<f64> {
        let mut d: Vec<Complex64> = hat.to_vec();
        for b in 0..self.my {
            for a in 0..self.mx {
                let (kx, ky, nx_, ny_) = self.wavenumbers(a, b);
                if (nx_ && px % 2 == 1) || (ny_ && py % 2 == 1) {
                    d[b * self.mx + a] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let m = Complex64::new(0.0, kx).powu(px) * Complex64::new(0.0, ky).powu(py);
                d[b * self.mx + a] *= m;
            }
        }
        self.fft2(&mut d, true);
        let scale = 1.0 / (self.mx * self.my) as f64;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(d[j * self.mx + i].re * scale);
            }
        }
        out
    }

    /// `Δ⁻¹` on mean-zero spectra.
    pub(crate) fn inverse_laplacian(&self, hat: &[Complex64]) -> Vec<Complex64> {
        let mut u = hat.to_vec();
        for b in 0..self.my {
            for a in 0..self.mx {
                let (kx, ky, _, _) = self.wavenumbers(a, b);
                let k2 = kx * kx + ky * ky;
                let idx = b * self.mx + a;
                u[idx] = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { -u[idx] / k2 };
            }
        }
        u
    }
}

/// Hermite interpolant of `v` built from spectrally exact node derivatives.
pub(crate) fn spectral_hermite(torus: &Torus, values: Vec<f64>, hat: &[Complex64]) -> HermiteField {
    HermiteField::new(
        torus.domain,
        torus.nx,
        torus.ny,
        values,
        torus.derivative(hat, 1, 0),
        torus.derivative(hat, 0, 1),
        torus.derivative(hat, 1, 1),
    )
}

pub(crate) fn check_density(rho: &DensityField) -> Result<()> {
    let min = rho.min();
    if !(min > 0.0) {
        return Err(MoserError::NonPositive { min });
    }
    let mean = rho.mean();
    if !((mean - 1.0).abs() <= MEAN_TOL) {
        return Err(MoserError::BadMean { mean });
    }
    Ok(())
}

/// `w = ∇u` with `Δu = ρ − 1` and homogeneous Neumann data, solved spectrally.
#[derive(Debug, Clone)]
pub struct SpectralField {
    domain: Domain,
    w: [HermiteField; 2],
    rho: HermiteField,
    residual: f64,
    /// Node values of `w`, in the density's layout.
    pub w_nodes: [Vec<f64>; 2],
}

impl SpectralField {
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

impl FlowField for SpectralField {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn field(&self, x: f64, y: f64) -> ([f64; 2], Mat2) {
        let c = self.w[0].locate(x, y);
        let (a, da) = self.w[0].eval_at(&c);
        let (b, db) = self.w[1].eval_at(&c);
        ([a, b], [da, db])
    }

    fn field_and_density(&self, x: f64, y: f64) -> ([f64; 2], Mat2, f64, [f64; 2]) {
        let c = self.w[0].locate(x, y);
        let (a, da) = self.w[0].eval_at(&c);
        let (b, db) = self.w[1].eval_at(&c);
        let (r, dr) = self.rho.eval_at(&c);
        ([a, b], [da, db], r, dr)
    }

    fn density(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        self.rho.eval(x, y)
    }

    fn divergence_residual(&self) -> f64 {
        self.residual
    }
}

pub fn solve_divergence(rho: &DensityField) -> Result<SpectralField> {
    check_density(rho)?;
    let torus = Torus::new(rho.domain, rho.nx, rho.ny);
    let f: Vec<f64> = rho.values.iter().map(|v| v - 1.0).collect();
    let fhat = torus.forward(&f);
    let uhat = torus.inverse_laplacian(&fhat);
    let d = |px, py| torus.derivative(&uhat, px, py);
    let (ux, uy, uxx, uxy, uyy) = (d(1, 0), d(0, 1), d(2, 0), d(1, 1), d(0, 2));
    let residual = uxx.iter().zip(&uyy).zip(&f).map(|((a, b), c)| (a + b - c).abs()).fold(0.0, f64::max);
    if !(residual < RESIDUAL_TOL) {
        return Err(MoserError::SolverResidual { residual, tol: RESIDUAL_TOL });
    }
    let w0 = HermiteField::new(rho.domain, rho.nx, rho.ny, ux.clone(), uxx, uxy.clone(), d(2, 1));
    let w1 = HermiteField::new(rho.domain, rho.nx, rho.ny, uy.clone(), uxy, uyy, d(1, 2));
    let rho_field = spectral_hermite(&torus, rho.values.clone(), &fhat);
    Ok(SpectralField { domain: rho.domain, w: [w0, w1], rho: rho_field, residual, w_nodes: [ux, uy] })
}

/// Cosine/Fourier Neumann Poisson solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralNeumannSolver;

impl DivergenceSolver for SpectralNeumannSolver {
    fn name(&self) -> &'static str {
        "spectral_neumann"
    }

    fn solve(&self, rho: &DensityField) -> Result<Arc<dyn FlowField>> {
        Ok(Arc::new(solve_divergence(rho)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn constant_density_gives_zero_field() {
        let rho = DensityField::from_fn(Domain::Annulus, 16, 9, |_, _| 1.0);
        let s = solve_divergence(&rho).unwrap();
        assert!(s.w_nodes[0].iter().chain(&s.w_nodes[1]).all(|v| *v == 0.0));
    }

    #[test]
    fn separable_mode_matches_closed_form() {
        let eps = 0.2;
        let rho = DensityField::from_fn(Domain::Annulus, 64, 17, |x, _| 1.0 + eps * (TAU * x).cos());
        let s = solve_divergence(&rho).unwrap();
        for i in 0..64 {
            let x = i as f64 / 64.0;
            assert!((s.w_nodes[0][5 * 64 + i] - eps * (TAU * x).sin() / TAU).abs() < 1e-15);
        }
        // u = −ε cos(2πx)/(4π²), so ∂x u = ε sin(2πx)/(2π).
        for &(x, y) in &[(0.1, 0.3), (0.37, 0.0), (0.81, 0.77)] {
            let (w, dw) = s.field(x, y);
            assert!((w[0] - eps * (TAU * x).sin() / TAU).abs() < 1e-8);
            assert!(w[1].abs() < 1e-12);
            assert!((dw[0][0] - eps * (TAU * x).cos()).abs() < 1e-4);
        }
        assert!(s.residual() < 1e-12);
    }

    #[test]
    fn square_cosine_mode() {
        let (k, m, a) = (2.0, 3.0, 0.25);
        let rho = DensityField::from_fn(Domain::Square, 33, 33, |x, y| 1.0 + a * (PI * k * x).cos() * (PI * m * y).cos());
        let s = solve_divergence(&rho).unwrap();
        let lam = PI * PI * (k * k + m * m);
        let (x, y) = (0.3, 0.6);
        let ux = a * PI * k * (PI * k * x).sin() * (PI * m * y).cos() / lam;
        let (w, _) = s.field(x, y);
        assert!((w[0] - ux).abs() < 1e-6, "{} vs {ux}", w[0]);
        // Zero normal component on all four sides.
        for t in [0.0, 0.23, 0.5, 1.0] {
            assert!(s.field(0.0, t).0[0].abs() < 1e-12 && s.field(1.0, t).0[0].abs() < 1e-12);
            assert!(s.field(t, 0.0).0[1].abs() < 1e-12 && s.field(t, 1.0).0[1].abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_density() {
        let rho = DensityField::from_fn(Domain::Annulus, 8, 5, |_, _| 1.1);
        assert!(matches!(solve_divergence(&rho), Err(MoserError::BadMean { .. })));
        let neg = DensityField::from_fn(Domain::Annulus, 8, 5, |x, _| 1.0 + 2.0 * (TAU * x).cos());
        assert!(matches!(solve_divergence(&neg), Err(MoserError::NonPositive { .. })));
    }
}
