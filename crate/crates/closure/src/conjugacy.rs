use std::fmt;
use std::sync::Arc;

use annulus_core::{mat, LiftPoint, Mat2, MetricSample};
use brouwer::ExtendedChart;
use cf_arith::BigRational;
use mapkit::{AnnulusMap, Primitive};
use moser::DensityField;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::approx::ApproximantReport;
use crate::periodic::ClosureResult;
use crate::tiling::{Combinatorics, TilingData};
use crate::{ClosureError, Result, Sampling, Tolerances};

struct Parts {
    data: TilingData,
    chart: ExtendedChart,
    g: AnnulusMap,
    g_inv: AnnulusMap,
    comb: Combinatorics,
}

/// `h|_{T_j} = s^j ∘ h₀ ∘ g^{−j}` with `h₀ = (φ ∘ Δ)⁻¹` on `T₀ = ℬ`.
///
/// On the cover `h₀(φ(u, v)) = ((u − 1)/q_{n+1}, v)`, so `ℬ` goes to `[−1/q_{n+1}, 0] × [0, 1]`.
#[derive(Clone)]
pub struct Conjugator(Arc<Parts>);

impl fmt::Debug for Conjugator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Conjugator").field("q", &self.0.data.q()).finish_non_exhaustive()
    }
}

impl Conjugator {
    pub fn new(closure: &ClosureResult) -> Self {
        let data = closure.data.clone();
        let comb = *data.combinatorics();
        Self(Arc::new(Parts { chart: closure.sigma_l.chart().clone(), g: closure.g.clone(), g_inv: closure.g.inverse(), comb, data }))
    }

    fn q(&self) -> f64 {
        self.0.comb.q_next as f64
    }

    /// `h₀` on the cover with `Dh₀`, for any point of the chart window.
    pub fn h0(&self, p: LiftPoint) -> Result<(LiftPoint, Mat2)> {
        let (u, v) = self.0.chart.inverse(p)?;
        let (_, d) = self.0.chart.eval_with_jacobian(u, v)?;
        let q = self.q();
        Ok((LiftPoint::new((u - 1.0) / q, v), mat::mul(&[[1.0 / q, 0.0], [0.0, 1.0]], &mat::inv(&d))))
    }

    /// The formula of tile `j` at `p`, whether or not `p` lies in `T_j`.
    pub fn in_tile(&self, p: LiftPoint, j: usize) -> Result<(LiftPoint, Mat2)> {
        let mut y = p;
        let mut jac = mat::IDENTITY;
        for _ in 0..j {
            let (z, d) = self.0.g_inv.apply_with_jacobian(y);
            y = z;
            jac = mat::mul(&d, &jac);
        }
        if !(y.x.is_finite() && y.y.is_finite()) {
            return Err(ClosureError::Evaluation(format!("g^{{−{j}}} failed at ({}, {})", p.x, p.y)));
        }
        let centre = self.0.chart.eval(0.5, y.y.clamp(0.0, 1.0))?.x;
        let m = (y.x - centre).round() as i64;
        let (w, d0) = self.h0(y.deck(-m))?;
        let (si, sf) = self.0.comb.s_power(j as i64);
        Ok((LiftPoint::new(w.x + sf + (si + m) as f64, w.y), mat::mul(&d0, &jac)))
    }

    /// `h(p)` with `Dh(p)` and the tile used.
    pub fn forward(&self, p: LiftPoint) -> Result<(LiftPoint, Mat2, usize)> {
        let loc = self.0.data.locate(p)?;
        let (w, d) = self.in_tile(p, loc.tile)?;
        Ok((w, d, loc.tile))
    }

    /// `h⁻¹(w) = g^j(φ(q_{n+1}(w − s^j − m) + 1, v)) + m` for the tile `j` whose image slot contains `w`.
    pub fn inverse(&self, w: LiftPoint) -> Result<LiftPoint> {
        let comb = &self.0.comb;
        let q = self.q();
        let c = (w.x * q).ceil() as i64;
        let j = comb.slot_to_tile(c);
        let (si, sf) = comb.s_power(j as i64);
        let x = w.x - sf - si as f64;
        let m = (x + 0.5 / q).round() as i64;
        let u = (q * (x - m as f64) + 1.0).clamp(0.0, 1.0);
        let mut z = self.0.chart.eval(u, w.y)?;
        for _ in 0..j {
            z = self.0.g.apply(z);
        }
        Ok(z.deck(m))
    }
}

impl Primitive for Conjugator {
    fn tag(&self) -> &'static str {
        "tile_conjugacy"
    }

    fn apply(&self, p: LiftPoint) -> LiftPoint {
        self.forward(p).map(|r| r.0).unwrap_or(LiftPoint::new(f64::NAN, f64::NAN))
    }

    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        self.inverse(p).unwrap_or(LiftPoint::new(f64::NAN, f64::NAN))
    }

    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        self.forward(p).map(|r| r.1).unwrap_or([[f64::NAN; 2]; 2])
    }

    fn closed_form(&self) -> bool {
        true
    }
}

/// Jumps of `h` across the curves of `Γ`, comparing the formulas of the two adjacent tiles.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeamReport {
    pub value: f64,
    pub derivative: f64,
    /// Curve with the largest value jump.
    pub worst_curve: usize,
}

#[derive(Debug, Clone)]
pub struct ConjugacyResult {
    pub conjugator: Conjugator,
    /// `h` before any area correction.
    pub h: AnnulusMap,
    /// `s = R_{p_{n+1}/q_{n+1}}`.
    pub s: AnnulusMap,
    pub s_exact: BigRational,
    /// `sup |h₀ − s^{−q_n} ∘ h₀ ∘ g^{q_n}|` near `γ`.
    pub matching: f64,
    /// Sampled `sup d(h(g(x)), s(h(x)))`.
    pub conjugacy: MetricSample,
    pub seams: SeamReport,
    /// Sampling points within the curve tolerance of a seam.
    pub flagged: usize,
    /// Smallest sampled `det Dh`.
    pub min_jacobian: f64,
    /// `h₁ = h⁻¹`, the map conjugating `s` back to `g`.
    pub h1: AnnulusMap,
    /// `h₂` from the Moser step, once corrected.
    pub h2: Option<AnnulusMap>,
    /// `h₁ ∘ h₂`, area-preserving up to the reported deviation.
    pub corrected: Option<AnnulusMap>,
    pub lambda: Option<DensityField>,
    pub area_deviation: Option<f64>,
    pub approximant: Option<ApproximantReport>,
}

impl ConjugacyResult {
    /// The conjugator of the approximant `H R_α H⁻¹`: `h₁ ∘ h₂` once corrected, `h⁻¹` before.
    pub fn approximant_conjugator(&self) -> &AnnulusMap {
        self.corrected.as_ref().unwrap_or(&self.h1)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "s": self.s_exact.to_string(),
            "matching": self.matching,
            "conjugacy": { "sup": self.conjugacy.sup, "argmax": [self.conjugacy.argmax.x, self.conjugacy.argmax.y] },
            "seams": { "value": self.seams.value, "derivative": self.seams.derivative, "worst_curve": self.seams.worst_curve },
            "flagged": self.flagged,
            "min_jacobian": self.min_jacobian,
            "area_deviation": self.area_deviation,
            "area_corrected": self.corrected.is_some(),
            "approximant": self.approximant.as_ref().map(|a| a.to_json()),
        })
    }
}

const MATCH_T: usize = 21;
const MATCH_V: usize = 17;

fn matching_residual(c: &Conjugator, closure: &ClosureResult) -> Result<f64> {
    let comb = closure.data.combinatorics();
    let q = c.q();
    let mut worst = 0.0f64;
    for i in 0..MATCH_T {
        let t = -0.1 + 0.2 * i as f64 / (MATCH_T - 1) as f64;
        for k in 0..MATCH_V {
            let v = k as f64 / (MATCH_V - 1) as f64;
            let p = c.0.chart.eval(1.0 + t, v)?;
            let (a, _) = c.h0(p)?;
            let mut z = p;
            for _ in 0..comb.q_n {
                z = closure.g.apply(z);
            }
            let (b, _) = c.h0(z.deck(-comb.p_n))?;
            // s^{−q_n} is the translation by 1/q_{n+1}.
            worst = worst.max((a.x - b.x - 1.0 / q).abs()).max((a.y - b.y).abs());
        }
    }
    Ok(worst)
}

fn seam_report(c: &Conjugator, data: &TilingData) -> Result<SeamReport> {
    let comb = data.combinatorics();
    let q = data.q();
    let mut rep = SeamReport::default();
    for (j, curve) in data.curves().iter().enumerate() {
        // Γ_j is the right side of T_j and the left side of T_{j−q_n}.
        let other = (j + q - comb.q_n as usize) % q;
        for &p in curve.samples() {
            let (a, da) = c.in_tile(p, j)?;
            let (b, db) = c.in_tile(p, other)?;
            let jump = a.dist(b);
            if jump > rep.value {
                rep.value = jump;
                rep.worst_curve = j;
            }
            rep.derivative = rep.derivative.max(mat::max_abs(&mat::sub(&da, &db)));
        }
    }
    Ok(rep)
}

/// `h` for a closed-up `g`, with matching, conjugacy and seam diagnostics.
pub fn build_conjugacy(closure: &ClosureResult, sampling: &Sampling, tol: &Tolerances) -> Result<ConjugacyResult> {
    if !(closure.periodicity.sup < tol.periodicity) {
        return Err(ClosureError::Periodicity { residual: closure.periodicity.sup, tol: tol.periodicity });
    }
    let data = &closure.data;
    let comb = *data.combinatorics();
    if !comb.matching_shift_is_unit() {
        return Err(ClosureError::Identity(format!("p_{{n+1}} q_n − p_n q_{{n+1}} ≠ −1 for {comb:?}")));
    }
    let c = Conjugator::new(closure);
    let matching = matching_residual(&c, closure)?;
    if !(matching < tol.conjugacy) {
        return Err(ClosureError::Matching { residual: matching, tol: tol.conjugacy });
    }
    let s_exact = comb.step_exact();
    let s = AnnulusMap::rotation_exact(&s_exact);
    let step = comb.p_next as f64 / comb.q_next as f64;
    let h = AnnulusMap::from_prim(c.clone());
    let pts = sampling.points();
    let conjugacy = MetricSample::over(&pts, (sampling.grid.nx, sampling.grid.ny), |p| {
        let a = h.apply(closure.g.apply(p));
        let b = h.apply(p);
        a.annulus_dist(LiftPoint::new(b.x + step, b.y))
    });
    let flagged = pts.par_iter().filter(|&&p| data.locate(p).map(|l| l.near_seam).unwrap_or(true)).count();
    let min_jacobian = pts
        .par_iter()
        .map(|&p| c.forward(p).map(|r| mat::det(&r.1)).unwrap_or(f64::NAN))
        .reduce(|| f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) });
    let seams = seam_report(&c, data)?;
    Ok(ConjugacyResult {
        h1: h.inverse(),
        conjugator: c,
        h,
        s,
        s_exact,
        matching,
        conjugacy,
        seams,
        flagged,
        min_jacobian,
        h2: None,
        corrected: None,
        lambda: None,
        area_deviation: None,
        approximant: None,
    })
}
