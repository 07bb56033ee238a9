use annulus_core::{mat, LiftPoint, Mat2};
use brouwer::{extend_chart, Chart, ExtendedChart};
use mapkit::AnnulusMap;
use serde_json::{json, Value};

use crate::tiling::TilingData;
use crate::{ClosureError, Result};

/// Chart-`u` interval of the cutoff: `ψ̂ = Id` left of it, `ψ̂ = ψ` right of it.
pub const BLEND: (f64, f64) = (0.25, 0.5);

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`, and its derivative.
pub fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let t2 = t * t;
    (t2 * t * (10.0 + t * (6.0 * t - 15.0)), 30.0 * t2 * (t - 1.0) * (t - 1.0))
}

const CHECK_U: usize = 65;
const CHECK_V: usize = 17;
/// Residual at which the inner Newton solve of `ψ̂⁻¹` is accepted.
const NEWTON_ACCEPT: f64 = 1e-10;

/// `σ_L = φ ∘ ψ̂ ∘ φ⁻¹` on `ℬ′`, with `ψ = φ⁻¹ ∘ Ψ ∘ φ` and `Ψ` the lift of `f^{−q_{n+1}}`.
#[derive(Debug, Clone)]
pub struct SigmaL {
    chart: ExtendedChart,
    psi: AnnulusMap,
    psi_inv: AnnulusMap,
    /// Range of chart-`u` over `γ′ = φ⁻¹(γ*)`.
    gamma_prime: (f64, f64),
    /// Sampled `max(|ψ − Id|, |Dψ − I|)` over `u ∈ [1/4, max γ′]`.
    c1_distance: f64,
    /// Smallest sampled `det Dψ̂`.
    min_det: f64,
    chart_residual: f64,
    displacement: f64,
}

fn blend_weight(u: f64) -> (f64, f64) {
    let w = BLEND.1 - BLEND.0;
    let (c, dc) = smoothstep((u - BLEND.0) / w);
    (c, dc / w)
}

impl SigmaL {
    pub fn chart(&self) -> &ExtendedChart {
        &self.chart
    }

    pub fn gamma_prime(&self) -> (f64, f64) {
        self.gamma_prime
    }

    pub fn c1_distance(&self) -> f64 {
        self.c1_distance
    }

    pub fn min_det(&self) -> f64 {
        self.min_det
    }

    pub fn chart_residual(&self) -> f64 {
        self.chart_residual
    }

    /// Sampled `sup |σ_L(x) − x|` over `ℬ′`.
    pub fn displacement(&self) -> f64 {
        self.displacement
    }

    /// `Ψ`, the lift of `f^{−q_{n+1}}` that `σ_L` agrees with near `γ*`.
    pub fn psi_map(&self) -> &AnnulusMap {
        &self.psi
    }

    /// `ψ(u, v)` with `Dψ`.
    pub fn psi(&self, u: f64, v: f64) -> Result<((f64, f64), Mat2)> {
        let (p, dphi) = self.chart.eval_with_jacobian(u, v)?;
        let (q, dpsi) = self.psi.apply_with_jacobian(p);
        let (u2, v2) = self.chart.inverse(q)?;
        let (_, dphi2) = self.chart.eval_with_jacobian(u2, v2)?;
        Ok(((u2, v2), mat::mul(&mat::inv(&dphi2), &mat::mul(&dpsi, &dphi))))
    }

    /// `ψ̂(u, v) = (1 − χ(u))·(u, v) + χ(u)·ψ(u, v)` with `Dψ̂`.
    pub fn psi_hat(&self, u: f64, v: f64) -> Result<((f64, f64), Mat2)> {
        if u <= BLEND.0 {
            return Ok(((u, v), mat::IDENTITY));
        }
        let ((pu, pv), dpsi) = self.psi(u, v)?;
        if u >= BLEND.1 {
            return Ok(((pu, pv), dpsi));
        }
        let (c, dc) = blend_weight(u);
        let diff = [pu - u, pv - v];
        let mut d = [[0.0; 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                d[r][s] = (1.0 - c) * mat::IDENTITY[r][s] + c * dpsi[r][s];
            }
            d[r][0] += dc * diff[r];
        }
        Ok(((u + c * diff[0], v + c * diff[1]), d))
    }

    /// `ψ⁻¹ = φ⁻¹ ∘ Ψ⁻¹ ∘ φ`.
    fn psi_inverse(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        let p = self.chart.eval(u, v)?;
        Ok(self.chart.inverse(self.psi_inv.apply(p))?)
    }

    pub fn psi_hat_inverse(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        if u <= BLEND.0 {
            return Ok((u, v));
        }
        let (a, b) = self.psi_inverse(u, v)?;
        if a >= BLEND.1 {
            return Ok((a, b));
        }
        // Inside the blend: Newton from the better of the two guesses, kept at its best iterate once
        // the residual reaches the evaluation noise of ψ.
        let mut z = if a > BLEND.0 { [a, b] } else { [u, v] };
        let mut best = (f64::INFINITY, z);
        for _ in 0..50 {
            let ((hu, hv), d) = self.psi_hat(z[0], z[1])?;
            let r = [hu - u, hv - v];
            let res = r[0].abs().max(r[1].abs());
            if res < best.0 {
                best = (res, z);
            } else if res < NEWTON_ACCEPT {
                break;
            }
            if res < 1e-15 {
                break;
            }
            let step = mat::apply(&mat::inv(&d), r);
            z = [z[0] - step[0], z[1] - step[1]];
        }
        if best.0 < NEWTON_ACCEPT {
            Ok((best.1[0], best.1[1]))
        } else {
            Err(ClosureError::Evaluation(format!("ψ̂⁻¹ did not converge at ({u}, {v}): residual {}", best.0)))
        }
    }

    /// `σ_L(p)` for `p ∈ ℬ′`.
    pub fn apply(&self, p: LiftPoint) -> Result<LiftPoint> {
        let (u, v) = self.chart.inverse(p)?;
        if u <= BLEND.0 {
            return Ok(p);
        }
        let ((a, b), _) = self.psi_hat(u, v)?;
        Ok(self.chart.eval(a, b)?)
    }

    pub fn apply_with_jacobian(&self, p: LiftPoint) -> Result<(LiftPoint, Mat2)> {
        let (u, v) = self.chart.inverse(p)?;
        if u <= BLEND.0 {
            return Ok((p, mat::IDENTITY));
        }
        let (_, dphi) = self.chart.eval_with_jacobian(u, v)?;
        let ((a, b), dh) = self.psi_hat(u, v)?;
        let (q, dphi2) = self.chart.eval_with_jacobian(a, b)?;
        Ok((q, mat::mul(&dphi2, &mat::mul(&dh, &mat::inv(&dphi)))))
    }

    /// `σ_L⁻¹(p)` for `p ∈ ℬ`.
    pub fn apply_inverse(&self, p: LiftPoint) -> Result<LiftPoint> {
        let (u, v) = self.chart.inverse(p)?;
        if u <= BLEND.0 {
            return Ok(p);
        }
        let (a, b) = self.psi_hat_inverse(u, v)?;
        Ok(self.chart.eval(a, b)?)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "blend": [BLEND.0, BLEND.1],
            "gamma_prime": [self.gamma_prime.0, self.gamma_prime.1],
            "c1_distance": self.c1_distance,
            "min_det": self.min_det,
            "chart_residual": self.chart_residual,
            "displacement": self.displacement,
            "rigid_chart": self.chart.chart().rigid().is_some(),
        })
    }
}

/// `σ_L` from a chart of `ℬ` for `T^{p_n} F^{−q_n}`, with `injectivity` bounding the C¹ size of `ψ`.
pub fn build_sigma_l(data: &TilingData, chart: &Chart, injectivity: f64) -> Result<SigmaL> {
    let lifts = data.lifts();
    let ext = extend_chart(chart, 1);
    let mut chart_residual = (chart.left().samples()[0].x - data.left().samples()[0].x).abs();
    for i in 0..=8 {
        for j in 0..=8 {
            let p = chart.eval(i as f64 / 8.0, j as f64 / 8.0);
            chart_residual = chart_residual.max(chart.map().apply(p).dist(lifts.fhat.apply(p)));
        }
    }
    if !(chart_residual < 1e-9) {
        return Err(ClosureError::ChartMismatch { residual: chart_residual });
    }

    let psi = lifts.psi.clone();
    let mut sigma = SigmaL {
        chart: ext,
        psi_inv: psi.inverse(),
        psi,
        gamma_prime: (f64::INFINITY, f64::NEG_INFINITY),
        c1_distance: 0.0,
        min_det: f64::INFINITY,
        chart_residual,
        displacement: 0.0,
    };
    for &p in data.gamma_star().samples() {
        let (u, _) = sigma.chart.inverse(p)?;
        sigma.gamma_prime = (sigma.gamma_prime.0.min(u), sigma.gamma_prime.1.max(u));
    }
    let (lo, hi) = sigma.gamma_prime;
    if !(lo > 0.75 && hi < 1.25) {
        return Err(ClosureError::GammaPrimeOutOfBand { min: lo, max: hi });
    }

    let mut c1 = 0.0f64;
    let mut min_det = f64::INFINITY;
    for i in 0..CHECK_U {
        let u = BLEND.0 + (hi - BLEND.0) * i as f64 / (CHECK_U - 1) as f64;
        for j in 0..CHECK_V {
            let v = j as f64 / (CHECK_V - 1) as f64;
            let ((pu, pv), d) = sigma.psi(u, v)?;
            c1 = c1.max((pu - u).abs()).max((pv - v).abs()).max(mat::max_abs(&[[d[0][0] - 1.0, d[0][1]], [d[1][0], d[1][1] - 1.0]]));
            let (_, dh) = sigma.psi_hat(u, v)?;
            min_det = min_det.min(mat::det(&dh));
        }
    }
    sigma.c1_distance = c1;
    sigma.min_det = min_det;
    if c1 > injectivity {
        return Err(ClosureError::InjectivityBudget { distance: c1, budget: injectivity });
    }
    if !(min_det > 0.0) {
        return Err(ClosureError::NotInjective { min_det });
    }

    let mut disp = 0.0f64;
    for i in 0..CHECK_U {
        let u = hi * i as f64 / (CHECK_U - 1) as f64;
        for j in 0..CHECK_V {
            let p = sigma.chart.eval(u, j as f64 / (CHECK_V - 1) as f64)?;
            disp = disp.max(sigma.apply(p)?.dist(p));
        }
    }
    sigma.displacement = disp;
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_tiling_data, tile_chart, ClosureError};
    use brouwer::{ChartOptions, Curve};
    use cf_arith::{rational_to_f64, PartialQuotients, RotationNumber};

    fn rotation_case(q: &[u64], n: usize) -> (TilingData, Chart, RotationNumber) {
        let alpha = RotationNumber::from_quotients(PartialQuotients::from_u64(q).unwrap());
        let f = AnnulusMap::rotation_exact(&alpha.representative());
        let data = build_tiling_data(&f, &Curve::vertical(0.0, 9), &alpha, n).unwrap();
        let chart = tile_chart(&data, &ChartOptions::default()).unwrap();
        (data, chart, alpha)
    }

    #[test]
    fn smoothstep_is_c2_at_the_ends() {
        assert_eq!(smoothstep(0.0), (0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0));
        assert_eq!(smoothstep(0.5).0, 0.5);
        let h = 1e-6;
        for t in [0.1, 0.37, 0.8] {
            let fd = (smoothstep(t + h).0 - smoothstep(t - h).0) / (2.0 * h);
            assert!((fd - smoothstep(t).1).abs() < 1e-8);
        }
        // Maximal slope 15/8 at t = 1/2.
        assert!((smoothstep(0.5).1 - 1.875).abs() < 1e-15);
    }

    #[test]
    fn rotation_sigma_interpolates_a_translation() {
        let (data, chart, alpha) = rotation_case(&[2, 3, 1, 4, 9], 3);
        let s = build_sigma_l(&data, &chart, 0.125).unwrap();
        let bn = rational_to_f64(&alpha.beta(3).unwrap());
        let bm = rational_to_f64(&alpha.beta(4).unwrap());
        // Ψ translates by −β_{n+1}, so ψ shifts u by −β_{n+1}/β_n.
        let shift = bm / bn;
        assert!((s.gamma_prime().0 - 1.0 - shift).abs() < 1e-12);
        let ((u, v), d) = s.psi(0.7, 0.3).unwrap();
        assert!((u - 0.7 + shift).abs() < 1e-12 && v == 0.3);
        assert!(mat::max_abs(&[[d[0][0] - 1.0, d[0][1]], [d[1][0], d[1][1] - 1.0]]) < 1e-12);
        assert!(s.displacement() <= bm + 1e-12);
        // det Dψ̂ = 1 − χ′(u)·shift with max χ′ = 7.5.
        assert!(s.min_det() > 1.0 - 7.5 * shift - 1e-12 && s.min_det() < 1.0 - 7.0 * shift);
        for (u, v) in [(0.1, 0.2), (0.3, 0.5), (0.42, 0.9), (0.9, 0.1)] {
            let ((a, b), _) = s.psi_hat(u, v).unwrap();
            let (x, y) = s.psi_hat_inverse(a, b).unwrap();
            assert!((x - u).abs() < 1e-12 && (y - v).abs() < 1e-12);
        }
        let p = chart.eval(0.4, 0.6);
        let q = s.apply(p).unwrap();
        assert!(s.apply_inverse(q).unwrap().dist(p) < 1e-12);
        let (q2, j) = s.apply_with_jacobian(p).unwrap();
        assert_eq!(q, q2);
        let fd = mapkit::fd_jacobian(|z| s.apply(z).unwrap(), p, 1e-6);
        assert!(mat::max_abs(&[[j[0][0] - fd[0][0], j[0][1] - fd[0][1]], [j[1][0] - fd[1][0], j[1][1] - fd[1][1]]]) < 1e-6);
    }

    #[test]
    fn periodic_rotation_gives_trivial_sigma() {
        // α = p_4/q_4 exactly: f^{q_4} = Id and γ* = γ.
        let (data, chart, _) = rotation_case(&[2, 3, 1, 4], 3);
        let s = build_sigma_l(&data, &chart, 0.125).unwrap();
        assert!(s.c1_distance() < 1e-12);
        assert!(s.displacement() < 1e-12);
    }

    #[test]
    fn small_a_next_breaks_the_budget() {
        // a_{n+2} = 2 makes ψ shift by about a third of the chart.
        let (data, chart, _) = rotation_case(&[2, 3, 1, 4, 2], 3);
        match build_sigma_l(&data, &chart, 0.125) {
            Err(ClosureError::InjectivityBudget { distance, .. }) => assert!(distance > 0.125),
            Err(ClosureError::GammaPrimeOutOfBand { .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
