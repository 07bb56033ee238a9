use std::sync::Arc;

use annulus_core::Mat2;

use crate::density::{DensityField, Domain};
use crate::solver::{DivergenceSolver, FlowField};
use crate::spectral::MEAN_TOL;
use crate::{HermiteField, MoserError, Result};

/// Antiderivatives of the cubic Hermite basis on `[0, s]`.
fn basis_integral(s: f64) -> ([f64; 2], [f64; 2]) {
    let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
    ([s4 / 2.0 - s3 + s, -s4 / 2.0 + s3], [s4 / 4.0 - 2.0 * s3 / 3.0 + s2 / 2.0, s4 / 4.0 - s3 / 3.0])
}

fn basis(s: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2],
        [s3 - 2.0 * s2 + s, s3 - s2],
        [6.0 * s2 - 6.0 * s, -6.0 * s2 + 6.0 * s],
        [3.0 * s2 - 4.0 * s + 1.0, 3.0 * s2 - 2.0 * s],
    )
}

/// Cumulative integrals of a 1D cubic Hermite interpolant with values `v` and slopes `d`.
fn cumulative(v: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 1..v.len() {
        let (hi, gi) = basis_integral(1.0);
        out[i] = out[i - 1] + h * (hi[0] * v[i - 1] + hi[1] * v[i] + h * (gi[0] * d[i - 1] + gi[1] * d[i]));
    }
    out
}

/// Partial integral `∫_0^x` of the same interpolant.
fn partial(cum: &[f64], v: &[f64], d: &[f64], h: f64, x: f64) -> f64 {
    let n = v.len();
    let t = x.clamp(0.0, 1.0) / h;
    let i = (t.floor() as usize).min(n - 2);
    let (hi, gi) = basis_integral(t - i as f64);
    cum[i] + h * (hi[0] * v[i] + hi[1] * v[i + 1] + h * (gi[0] * d[i] + gi[1] * d[i + 1]))
}

/// Fourth-order finite-difference derivative of equally spaced samples.
fn fd4(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    if n < 5 {
        return (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (v[b] - v[a]) / ((b - a) as f64 * h)
            })
            .collect();
    }
    (0..n)
        .map(|i| {
            let d = if i == 0 {
                -25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]
            } else if i == 1 {
                -3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]
            } else if i == n - 2 {
                3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]
            } else if i == n - 1 {
                25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]
            } else {
                -v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]
            };
            d / (12.0 * h)
        })
        .collect()
}

fn d_x(v: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        out[j * nx..(j + 1) * nx].copy_from_slice(&fd4(&v[j * nx..(j + 1) * nx], h));
    }
    out
}

fn d_y(v: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        let col: Vec<f64> = (0..ny).map(|j| v[j * nx + i]).collect();
        for (j, d) in fd4(&col, h).into_iter().enumerate() {
            out[j * nx + i] = d;
        }
    }
    out
}

/// Quintic smoothstep `ζ` on `[a, b]` and its first two derivatives.
fn zeta(a: f64, b: f64, u: f64) -> (f64, f64, f64) {
    if u <= a {
        return (0.0, 0.0, 0.0);
    }
    if u >= b {
        return (1.0, 0.0, 0.0);
    }
    let w = b - a;
    let s = (u - a) / w;
    let (s2, s3) = (s * s, s * s * s);
    (
        6.0 * s3 * s2 - 15.0 * s2 * s2 + 10.0 * s3,
        (30.0 * s2 * s2 - 60.0 * s3 + 30.0 * s2) / w,
        (120.0 * s3 - 180.0 * s2 + 60.0 * s) / (w * w),
    )
}

/// `w = (F − ζ(u) g(v), ζ'(u) G(v))` on the unit square with
/// `F(u,v) = ∫_0^u f`, `g = F(1,·)`, `G = ∫_0^v g`, `f = ρ − 1`.
///
/// `div w = f` holds identically for the interpolated `f`, and `w` vanishes
/// wherever `u` lies outside the `u`-support of `f`. Node derivatives use
/// local fourth-order differences so that the support stays compact.
#[derive(Debug, Clone)]
pub struct FluxField {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    rho: HermiteField,
    /// Per row: values of `f`, `∂x f`, `∂y f`, `∂xy f` along `x`.
    rows: Vec<[Vec<f64>; 4]>,
    /// Per row: cumulative `x`-integrals of the (`f`, `∂x f`) and (`∂y f`, `∂xy f`) Hermite pairs.
    cums: Vec<[Vec<f64>; 2]>,
    /// Node values and slopes of `g`, and cumulative integrals for `G`.
    g: Vec<f64>,
    gp: Vec<f64>,
    gcum: Vec<f64>,
    support: (f64, f64),
    residual: f64,
}

impl FluxField {
    fn row_integral(&self, j: usize, x: f64) -> (f64, f64) {
        let r = &self.rows[j];
        let c = &self.cums[j];
        (partial(&c[0], &r[0], &r[1], self.dx, x), partial(&c[1], &r[2], &r[3], self.dx, x))
    }

    /// `F(u, v)` and `∂v F(u, v)`.
    fn big_f(&self, u: f64, v: f64) -> (f64, f64) {
        let t = v.clamp(0.0, 1.0) / self.dy;
        let j = (t.floor() as usize).min(self.ny - 2);
        let (hy, gy, dhy, dgy) = basis(t - j as f64);
        let (mut f, mut fv) = (0.0, 0.0);
        for b in 0..2 {
            let (p, q) = self.row_integral(j + b, u);
            f += hy[b] * p + self.dy * gy[b] * q;
            fv += dhy[b] * p / self.dy + dgy[b] * q;
        }
        (f, fv)
    }

    fn small_g(&self, v: f64) -> (f64, f64, f64) {
        let t = v.clamp(0.0, 1.0) / self.dy;
        let j = (t.floor() as usize).min(self.ny - 2);
        let s = t - j as f64;
        let (hy, gy, dhy, dgy) = basis(s);
        let g = hy[0] * self.g[j] + hy[1] * self.g[j + 1] + self.dy * (gy[0] * self.gp[j] + gy[1] * self.gp[j + 1]);
        let gp = (dhy[0] * self.g[j] + dhy[1] * self.g[j + 1]) / self.dy + dgy[0] * self.gp[j] + dgy[1] * self.gp[j + 1];
        (g, gp, partial(&self.gcum, &self.g, &self.gp, self.dy, v))
    }

    /// Signed quadrature mass `∫∫ (ρ − 1)` of the interpolant.
    pub fn mass(&self) -> f64 {
        self.gcum[self.ny - 1]
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn nodes(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

impl FlowField for FluxField {
    fn domain(&self) -> Domain {
        Domain::Square
    }

    fn field(&self, u: f64, v: f64) -> ([f64; 2], Mat2) {
        let (a, b) = self.support;
        let (z, zp, zpp) = zeta(a, b, u);
        let (big, big_v) = self.big_f(u, v);
        let (g, gp, gg) = self.small_g(v);
        let (rho, _) = self.rho.eval(u, v);
        let f = rho - 1.0;
        let w = [big - z * g, zp * gg];
        let dw = [[f - zp * g, big_v - z * gp], [zpp * gg, zp * g]];
        (w, dw)
    }

    fn density(&self, u: f64, v: f64) -> (f64, [f64; 2]) {
        self.rho.eval(u, v)
    }

    fn divergence_residual(&self) -> f64 {
        self.residual
    }
}

/// Builds [`FluxField`]s; `threshold` decides the `u`-support of `ρ − 1`.
#[derive(Debug, Clone, Copy)]
pub struct CompactFluxSolver {
    pub threshold: f64,
}

impl Default for CompactFluxSolver {
    fn default() -> Self {
        Self { threshold: 1e-14 }
    }
}

impl CompactFluxSolver {
    /// Field for `ρ`; errors unless the quadrature mass of `ρ − 1` vanishes.
    pub fn build(&self, rho: &DensityField) -> Result<FluxField> {
        let field = self.assemble(rho)?;
        if !(field.residual <= MEAN_TOL) {
            return Err(MoserError::BadMean { mean: 1.0 + field.mass() });
        }
        Ok(field)
    }

    /// Signed quadrature mass of `ρ − 1`, the linear functional `build` requires to vanish.
    pub fn mass_of(&self, rho: &DensityField) -> Result<f64> {
        Ok(self.assemble(rho)?.mass())
    }

    fn assemble(&self, rho: &DensityField) -> Result<FluxField> {
        if rho.domain != Domain::Square {
            return Err(MoserError::Unsupported { solver: "compact_flux", what: "periodic domains".into() });
        }
        let min = rho.min();
        if !(min > 0.0) {
            return Err(MoserError::NonPositive { min });
        }
        let (nx, ny) = (rho.nx, rho.ny);
        let (dx, dy) = (rho.dx(), rho.dy());
        let f: Vec<f64> = rho.values.iter().map(|v| v - 1.0).collect();
        let fx = d_x(&f, nx, ny, dx);
        let fy = d_y(&f, nx, ny, dy);
        let fxy = d_y(&fx, nx, ny, dy);
        let rho_field = HermiteField::new(Domain::Square, nx, ny, rho.values.clone(), fx.clone(), fy.clone(), fxy.clone());
        let col = |i: usize| (0..ny).map(|j| f[j * nx + i].abs()).fold(0.0, f64::max);
        let active: Vec<usize> = (0..nx).filter(|&i| col(i) > self.threshold).collect();
        let support = match (active.first(), active.last()) {
            (Some(&a), Some(&b)) => ((a.saturating_sub(3)) as f64 * dx, ((b + 3).min(nx - 1)) as f64 * dx),
            _ => (0.0, 1.0),
        };
        let mut rows = Vec::with_capacity(ny);
        let mut cums = Vec::with_capacity(ny);
        let slice = |v: &[f64], j: usize| v[j * nx..(j + 1) * nx].to_vec();
        for j in 0..ny {
            let r = [slice(&f, j), slice(&fx, j), slice(&fy, j), slice(&fxy, j)];
            cums.push([cumulative(&r[0], &r[1], dx), cumulative(&r[2], &r[3], dx)]);
            rows.push(r);
        }
        let g: Vec<f64> = cums.iter().map(|c| c[0][nx - 1]).collect();
        let gp: Vec<f64> = cums.iter().map(|c| c[1][nx - 1]).collect();
        let gcum = cumulative(&g, &gp, dy);
        let mut field = FluxField { nx, ny, dx, dy, rho: rho_field, rows, cums, g, gp, gcum, support, residual: 0.0 };
        // Normal flux through v = 1 is G(1), the quadrature mass of ρ − 1.
        field.residual = field.gcum[ny - 1].abs();
        Ok(field)
    }
}

impl DivergenceSolver for CompactFluxSolver {
    fn name(&self) -> &'static str {
        "compact_flux"
    }

    fn solve(&self, rho: &DensityField) -> Result<Arc<dyn FlowField>> {
        Ok(Arc::new(self.build(rho)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn strip_density() -> DensityField {
        // ρ − 1 supported in u ∈ [0.3, 0.7], mean zero along every row.
        DensityField::from_fn(Domain::Square, 65, 33, |u, v| {
            if (0.3..=0.7).contains(&u) {
                let s = (u - 0.3) / 0.4;
                1.0 + 0.3 * (PI * s).sin().powi(4) * (PI * v).cos() + 0.1 * (2.0 * PI * s).sin().powi(3)
            } else {
                1.0
            }
        })
    }

    #[test]
    fn divergence_matches_density() {
        let field = CompactFluxSolver::default().build(&strip_density()).unwrap();
        assert!(field.divergence_residual() < 1e-10);
        for &(u, v) in &[(0.4, 0.2), (0.55, 0.8), (0.65, 0.5)] {
            let (_, dw) = field.field(u, v);
            let (rho, _) = field.density(u, v);
            assert!((dw[0][0] + dw[1][1] - (rho - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishes_on_margins_and_boundary() {
        let field = CompactFluxSolver::default().build(&strip_density()).unwrap();
        let (a, b) = field.support();
        assert!(a > 0.2 && b < 0.8);
        for &(u, v) in &[(0.1, 0.3), (0.9, 0.6), (0.0, 0.0), (1.0, 0.5)] {
            let (w, _) = field.field(u, v);
            assert!(w[0].abs() < 1e-10 && w[1].abs() < 1e-10, "{w:?} at {u},{v}");
        }
        for u in [0.35, 0.5, 0.66] {
            assert!(field.field(u, 0.0).0[1].abs() < 1e-12);
            assert!(field.field(u, 1.0).0[1].abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_consistent_with_difference_quotients() {
        let field = CompactFluxSolver::default().build(&strip_density()).unwrap();
        let (u, v, h) = (0.47, 0.38, 1e-6);
        let (_, dw) = field.field(u, v);
        for c in 0..2 {
            let du = (field.field(u + h, v).0[c] - field.field(u - h, v).0[c]) / (2.0 * h);
            let dv = (field.field(u, v + h).0[c] - field.field(u, v - h).0[c]) / (2.0 * h);
            assert!((du - dw[c][0]).abs() < 1e-6 && (dv - dw[c][1]).abs() < 1e-6);
        }
    }
}
