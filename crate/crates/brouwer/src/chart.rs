use annulus_core::{mat, LiftPoint, Mat2};
use mapkit::{iterate, AnnulusMap};
use moser::{moser_flow_with, CompactFluxSolver, DensityField, Domain, MoserFlow, MoserOptions};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::curve::{GraphProfile, LiftedCurve};
use crate::order::{curve_order, CurveOrder};
use crate::{BrouwerError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartOptions {
    /// Width of the left and right strips where the chart is exactly `ψ_L` and `ψ_R`.
    pub margin: f64,
    /// Density nodes per side for the Jacobian correction.
    pub density_nodes: usize,
    pub moser_steps: u32,
    pub moser_tolerance: f64,
    /// Regions with smaller area are rejected as degenerate.
    pub min_area: f64,
    /// Nodes per side for the sampled invariant checks.
    pub check_nodes: usize,
    pub jacobian_tolerance: f64,
    pub equivariance_tolerance: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            margin: 0.125,
            density_nodes: 129,
            moser_steps: 64,
            moser_tolerance: 1e-5,
            min_area: 1e-10,
            check_nodes: 64,
            jacobian_tolerance: 1e-4,
            equivariance_tolerance: 1e-6,
        }
    }
}

/// Sampled residuals of the chart invariants.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChartDiagnostics {
    /// Sup of `|det Dφ − J|/J` over the check grid.
    pub jacobian_deviation: f64,
    /// Sup of `|F φ(u,v) − φ(u+1,v)|` for `u ∈ [−margin, 0]`.
    pub equivariance_residual: f64,
    /// Sup distance of `φ(0,·)`, `φ(1,·)` from `γ`, `F(γ)` at the curve samples,
    /// and of the bottom and top edges from the boundary circles.
    pub edge_residual: f64,
    /// Sup of `|ρ − 1|` for the uncorrected interpolation, `ρ = det Dφ₀ / J`.
    pub density_deviation: f64,
    /// Pullback residual of the correction, when one was needed.
    pub moser_residual: Option<f64>,
}

impl ChartDiagnostics {
    pub fn to_json(&self) -> Value {
        json!({
            "jacobian_deviation": self.jacobian_deviation,
            "equivariance_residual": self.equivariance_residual,
            "edge_residual": self.edge_residual,
            "density_deviation": self.density_deviation,
            "moser_residual": self.moser_residual,
        })
    }
}

#[derive(Debug, Clone)]
enum Shape {
    /// `φ(u,v) = (c + βu, v)`.
    Rigid { c: f64, beta: f64 },
    /// `φ = φ₀ ∘ h₂` with `φ₀ = ψ_L + χ(u)(ψ_R − ψ_L)`, `χ` a `C^∞` transition.
    Sheared { profile: GraphProfile, kappa: f64, correction: Option<(MoserFlow, (f64, f64))> },
}

/// Constant-Jacobian coordinates `φ : [0,1]² → (γ, F(γ))` with `F φ = φ T` near the left edge.
#[derive(Debug, Clone)]
pub struct Chart {
    map: AnnulusMap,
    left: LiftedCurve,
    shape: Shape,
    jacobian: f64,
    margin: f64,
    /// Start of the blend; the correction support stays inside `[margin, 1 − margin]`.
    inner: f64,
    diagnostics: ChartDiagnostics,
}

/// `C^∞` transition `e(t)/(e(t) + e(1−t))`, `e(t) = exp(−1/t)`, and its derivative.
fn transition(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = ((-1.0 / t).exp(), (-1.0 / (1.0 - t)).exp());
    let (da, db) = (a / (t * t), b / ((1.0 - t) * (1.0 - t)));
    let s = a + b;
    (a / s, (da * b + a * db) / (s * s))
}

const GL4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.3478548451374538),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.3478548451374538),
];

/// Area between `γ` and `F(γ)` by `∮ x dy`, Gauss–Legendre on refined sample intervals.
fn region_area(f: &AnnulusMap, profile: &GraphProfile, knots: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in knots.windows(2) {
        let sub = 16;
        let h = (w[1] - w[0]) / sub as f64;
        for k in 0..sub {
            let mid = w[0] + (k as f64 + 0.5) * h;
            for (x, wt) in GL4 {
                let s = mid + 0.5 * h * x;
                let (c, dc) = profile.eval(s);
                let (q, j) = f.apply_with_jacobian(LiftPoint::new(c, s));
                let dy = j[1][0] * dc + j[1][1];
                total += 0.5 * h * wt * (q.x * dy - c);
            }
        }
    }
    total
}

impl Chart {
    /// The map `F` whose fundamental region the chart parameterises.
    pub fn map(&self) -> &AnnulusMap {
        &self.map
    }

    pub fn left(&self) -> &LiftedCurve {
        &self.left
    }

    /// The constant `J_φ = det Dφ`, equal to the area of the region.
    pub fn jacobian(&self) -> f64 {
        self.jacobian
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn diagnostics(&self) -> &ChartDiagnostics {
        &self.diagnostics
    }

    /// `(c, β)` for a rigid chart `φ(u,v) = (c + βu, v)`.
    pub fn rigid(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Rigid { c, beta } => Some((c, beta)),
            Shape::Sheared { .. } => None,
        }
    }

    fn blend(&self) -> f64 {
        1.0 - 2.0 * self.inner
    }

    /// `φ₀` and its Jacobian.
    fn base(&self, profile: &GraphProfile, kappa: f64, u: f64, v: f64) -> (LiftPoint, Mat2) {
        let (c, dc) = profile.eval(v);
        let left = LiftPoint::new(c + kappa * u, v);
        let dl: Mat2 = [[kappa, dc], [0.0, 1.0]];
        let (chi, dchi) = transition((u - self.inner) / self.blend());
        if chi == 0.0 && dchi == 0.0 && u < 0.5 {
            return (left, dl);
        }
        let (right, dfr) = self.map.apply_with_jacobian(LiftPoint::new(c + kappa * (u - 1.0), v));
        let dr = mat::mul(&dfr, &dl);
        if chi == 1.0 && dchi == 0.0 {
            return (right, dr);
        }
        let dchi = dchi / self.blend();
        let diff = [right.x - left.x, right.y - left.y];
        let p = LiftPoint::new(left.x + chi * diff[0], left.y + chi * diff[1]);
        let mut d = [[0.0; 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                d[r][s] = (1.0 - chi) * dl[r][s] + chi * dr[r][s];
            }
            d[r][0] += dchi * diff[r];
        }
        (p, d)
    }

    /// `φ(u,v)` and `Dφ(u,v)`; outside `u ∈ [0,1]` the formulas of the margins continue.
    pub fn eval_with_jacobian(&self, u: f64, v: f64) -> (LiftPoint, Mat2) {
        match &self.shape {
            Shape::Rigid { c, beta } => (LiftPoint::new(c + beta * u, v), [[*beta, 0.0], [0.0, 1.0]]),
            Shape::Sheared { profile, kappa, correction } => match correction {
                Some((h2, (a, b))) if u > *a && u < *b => {
                    let (q, jh) = h2.forward(LiftPoint::new(u, v));
                    let (p, jb) = self.base(profile, *kappa, q.x, q.y);
                    (p, mat::mul(&jb, &jh))
                }
                _ => self.base(profile, *kappa, u, v),
            },
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> LiftPoint {
        match &self.shape {
            Shape::Rigid { c, beta } => LiftPoint::new(c + beta * u, v),
            _ => self.eval_with_jacobian(u, v).0,
        }
    }

    /// Chart coordinates of `p` by Newton iteration from the shear guess.
    pub fn inverse(&self, p: LiftPoint) -> Result<(f64, f64)> {
        match &self.shape {
            Shape::Rigid { c, beta } => Ok(((p.x - c) / beta, p.y)),
            Shape::Sheared { profile, kappa, .. } => {
                let mut z = [(p.x - profile.eval(p.y).0) / kappa, p.y];
                for _ in 0..60 {
                    let (q, j) = self.eval_with_jacobian(z[0], z[1]);
                    let r = [q.x - p.x, q.y - p.y];
                    if r[0].abs().max(r[1].abs()) < 1e-14 {
                        return Ok((z[0], z[1]));
                    }
                    let step = mat::apply(&mat::inv(&j), r);
                    z = [z[0] - step[0], (z[1] - step[1]).clamp(0.0, 1.0)];
                }
                let (q, _) = self.eval_with_jacobian(z[0], z[1]);
                if (q.x - p.x).abs().max((q.y - p.y).abs()) < 1e-11 {
                    Ok((z[0], z[1]))
                } else {
                    Err(BrouwerError::InverseFailed { x: p.x, y: p.y })
                }
            }
        }
    }

    /// Grid blob: `φ` sampled at `u = i/(nx−1)`, `v = j/(ny−1)`, row-major in `v`.
    pub fn to_json(&self, nx: usize, ny: usize) -> Value {
        let (nx, ny) = (nx.max(2), ny.max(2));
        let mut xs = Vec::with_capacity(nx * ny);
        let mut ys = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = self.eval(i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64);
                xs.push(p.x);
                ys.push(p.y);
            }
        }
        json!({
            "kind": if self.rigid().is_some() { "rigid" } else { "sheared" },
            "jacobian": self.jacobian,
            "margin": self.margin,
            "nx": nx,
            "ny": ny,
            "x": xs,
            "y": ys,
            "diagnostics": self.diagnostics.to_json(),
        })
    }

    fn measure(&self, opts: &ChartOptions) -> ChartDiagnostics {
        let n = opts.check_nodes.max(2);
        let nodes: Vec<(f64, f64)> =
            (0..n).flat_map(|j| (0..n).map(move |i| (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64))).collect();
        let jac = nodes
            .par_iter()
            .map(|&(u, v)| (mat::det(&self.eval_with_jacobian(u, v).1) / self.jacobian - 1.0).abs())
            .reduce(|| 0.0, f64::max);
        let mut equiv = 0.0f64;
        for k in 0..=4 {
            let u = -self.margin * k as f64 / 4.0;
            for j in 0..=32 {
                let v = j as f64 / 32.0;
                let a = self.map.apply(self.eval(u, v));
                let b = self.eval(u + 1.0, v);
                equiv = equiv.max(a.dist(b));
            }
        }
        let mut edge = 0.0f64;
        for s in self.left.samples() {
            edge = edge.max(self.eval(0.0, s.y).dist(*s));
            edge = edge.max(self.eval(1.0, s.y).dist(self.map.apply(*s)));
        }
        for i in 0..=32 {
            let u = i as f64 / 32.0;
            edge = edge.max(self.eval(u, 0.0).y.abs()).max((self.eval(u, 1.0).y - 1.0).abs());
        }
        ChartDiagnostics { jacobian_deviation: jac, equivariance_residual: equiv, edge_residual: edge, ..self.diagnostics }
    }
}

/// Admissible coordinates for the region `(γ, F(γ))` from shear coordinates along `γ`.
///
/// `γ` must be a graph over `y` with `F(γ)` to its right. For a vertical `γ` and a
/// rigid `F` the chart is affine. Otherwise `ψ_L(u,v) = (c(v) + κu, v)` with `κ` the
/// region's area, `ψ_R = F ψ_L T⁻¹`, a smoothstep blend in between, and a compactly
/// supported Moser correction of the blend's Jacobian.
pub fn build_admissible_chart(f: &AnnulusMap, gamma: &LiftedCurve) -> Result<Chart> {
    build_admissible_chart_with(f, gamma, &ChartOptions::default())
}

pub fn build_admissible_chart_with(f: &AnnulusMap, gamma: &LiftedCurve, opts: &ChartOptions) -> Result<Chart> {
    let profile = GraphProfile::new(gamma).ok_or(BrouwerError::NotAGraph)?;
    let knots: Vec<f64> = gamma.samples().iter().map(|p| p.y).collect();
    let rigid = match f.translation() {
        Some(beta) if gamma.is_vertical() => Some(beta),
        _ => None,
    };
    let area = match f.translation() {
        Some(beta) => beta,
        None => region_area(f, &profile, &knots),
    };
    if !(area >= opts.min_area) {
        return Err(BrouwerError::Degenerate { area, min: opts.min_area });
    }
    let order = curve_order(gamma, &gamma.image(f));
    if order != CurveOrder::Left {
        return Err(BrouwerError::NotBrouwer(order));
    }
    let mut chart = Chart {
        map: f.clone(),
        left: gamma.clone(),
        shape: match rigid {
            Some(beta) => Shape::Rigid { c: gamma.samples()[0].x, beta },
            None => Shape::Sheared { profile: profile.clone(), kappa: area, correction: None },
        },
        jacobian: area,
        margin: opts.margin,
        inner: opts.margin + 4.0 / (opts.density_nodes.max(9) - 1) as f64,
        diagnostics: ChartDiagnostics::default(),
    };
    if rigid.is_none() {
        correct(&mut chart, &profile, area, opts)?;
    }
    chart.diagnostics = chart.measure(opts);
    let d = chart.diagnostics;
    if !(d.jacobian_deviation < opts.jacobian_tolerance) {
        return Err(BrouwerError::ChartCheck { what: "jacobian", value: d.jacobian_deviation, tol: opts.jacobian_tolerance });
    }
    if !(d.equivariance_residual < opts.equivariance_tolerance) {
        return Err(BrouwerError::ChartCheck { what: "equivariance", value: d.equivariance_residual, tol: opts.equivariance_tolerance });
    }
    if !(d.edge_residual < opts.equivariance_tolerance) {
        return Err(BrouwerError::ChartCheck { what: "edges", value: d.edge_residual, tol: opts.equivariance_tolerance });
    }
    Ok(chart)
}

/// Replaces the blend by `φ₀ ∘ h₂` with `ρ(h₂) det Dh₂ = 1`, `ρ = det Dφ₀ / κ`.
fn correct(chart: &mut Chart, profile: &GraphProfile, kappa: f64, opts: &ChartOptions) -> Result<()> {
    let n = opts.density_nodes.max(9);
    let m = chart.inner;
    let h = 1.0 / (n - 1) as f64;
    let nodes: Vec<(f64, f64)> = (0..n).flat_map(|j| (0..n).map(move |i| (i as f64 * h, j as f64 * h))).collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&(u, v)| if u <= m || u >= 1.0 - m { 1.0 } else { mat::det(&chart.base(profile, kappa, u, v).1) / kappa })
        .collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(BrouwerError::NotInjective { min_det: min * kappa });
    }
    let deviation = values.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    chart.diagnostics.density_deviation = deviation;
    if deviation < 1e-13 {
        return Ok(());
    }
    let solver = CompactFluxSolver::default();
    let mut rho = DensityField::new(Domain::Square, n, n, values).map_err(BrouwerError::Correction)?;
    // Zero the quadrature mass with a bump supported strictly inside the blend strip.
    let bump = |u: f64| {
        let s = (u - m) / (1.0 - 2.0 * m);
        if s <= 0.0 || s >= 1.0 {
            0.0
        } else {
            (4.0 * s * (1.0 - s)).powi(3)
        }
    };
    let unit = DensityField::from_fn(Domain::Square, n, n, |u, _| 1.0 + bump(u));
    let mb = solver.mass_of(&unit).map_err(BrouwerError::Correction)?;
    let mass = solver.mass_of(&rho).map_err(BrouwerError::Correction)?;
    let c = -mass / mb;
    for (k, v) in rho.values.iter_mut().enumerate() {
        *v += c * bump(nodes[k].0);
    }
    let field = solver.build(&rho).map_err(BrouwerError::Correction)?;
    let support = field.support();
    let flow = moser_flow_with(&solver, &rho, MoserOptions { steps: opts.moser_steps, tolerance: Some(opts.moser_tolerance) })
        .map_err(BrouwerError::Correction)?;
    chart.diagnostics.moser_residual = flow.residual;
    if let Shape::Sheared { correction, .. } = &mut chart.shape {
        *correction = Some((flow, support));
    }
    Ok(())
}

/// `φ` on `[−k, k+1] × [0,1]` through `φ(u + j, v) = F^j(φ(u, v))`.
#[derive(Debug, Clone)]
pub struct ExtendedChart {
    chart: Chart,
    window: i64,
    /// `F^j` for `j = −window ..= window`.
    powers: Vec<AnnulusMap>,
}

pub fn extend_chart(chart: &Chart, window: i64) -> ExtendedChart {
    let window = window.max(0);
    let powers = (-window..=window).map(|j| iterate(chart.map(), j)).collect();
    ExtendedChart { chart: chart.clone(), window, powers }
}

impl ExtendedChart {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    fn tile(&self, u: f64) -> Result<i64> {
        let k = self.window;
        if !(u >= -(k as f64) && u <= (k + 1) as f64) {
            return Err(BrouwerError::WindowExceeded { u, window: k });
        }
        Ok((u.floor() as i64).min(k))
    }

    pub fn power(&self, j: i64) -> &AnnulusMap {
        &self.powers[(j + self.window) as usize]
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<LiftPoint> {
        let j = self.tile(u)?;
        if let Some((c, beta)) = self.chart.rigid() {
            return Ok(LiftPoint::new(c + beta * u, v));
        }
        if j == 0 {
            return Ok(self.chart.eval(u, v));
        }
        Ok(self.power(j).apply(self.chart.eval(u - j as f64, v)))
    }

    pub fn eval_with_jacobian(&self, u: f64, v: f64) -> Result<(LiftPoint, Mat2)> {
        let j = self.tile(u)?;
        if let Some((c, beta)) = self.chart.rigid() {
            return Ok((LiftPoint::new(c + beta * u, v), [[beta, 0.0], [0.0, 1.0]]));
        }
        let (p, d) = self.chart.eval_with_jacobian(u - j as f64, v);
        if j == 0 {
            return Ok((p, d));
        }
        let (q, dj) = self.power(j).apply_with_jacobian(p);
        Ok((q, mat::mul(&dj, &d)))
    }

    /// Inverse on the window, locating the tile from the shear guess.
    pub fn inverse(&self, p: LiftPoint) -> Result<(f64, f64)> {
        if let Some((c, beta)) = self.chart.rigid() {
            let u = (p.x - c) / beta;
            self.tile(u)?;
            return Ok((u, p.y));
        }
        let (u0, _) = self.chart.inverse(p).unwrap_or(((p.x - self.chart.left.samples()[0].x) / self.chart.jacobian, p.y));
        let mut j = self.tile(u0.clamp(-(self.window as f64), (self.window + 1) as f64))?;
        for _ in 0..4 {
            let q = self.power(-j).apply(p);
            let (u, v) = self.chart.inverse(q)?;
            if (-1e-9..=1.0 + 1e-9).contains(&u) {
                let w = u + j as f64;
                self.tile(w)?;
                return Ok((w, v));
            }
            j = (j + u.floor() as i64).clamp(-self.window, self.window);
        }
        Err(BrouwerError::InverseFailed { x: p.x, y: p.y })
    }

    /// Sup of `|F φ(u,v) − φ(u+1,v)|` for `u ∈ [−k, k)` on `samples` points per unit.
    pub fn equivariance_residual(&self, samples: usize) -> f64 {
        let f = self.chart.map();
        let k = self.window;
        let mut worst = 0.0f64;
        let per = samples.max(1);
        for i in 0..(2 * k as usize * per) {
            let u = -(k as f64) + i as f64 / per as f64;
            for j in 0..=8 {
                let v = j as f64 / 8.0;
                if let (Ok(a), Ok(b)) = (self.eval(u, v), self.eval(u + 1.0, v)) {
                    worst = worst.max(f.apply(a).dist(b));
                }
            }
        }
        worst
    }
}
