use std::fmt;
use std::sync::Arc;

use annulus_core::{diffr_distance, mat, IdentityMap, LiftPoint, Mat2, MetricSample, FD_STEP};
use mapkit::{compose, AnnulusMap, Primitive};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::sigma::SigmaL;
use crate::tiling::{is_right_of, point_curve_distance, TilingData};
use crate::{ClosureError, Result, Sampling, Tolerances};

struct Parts {
    data: TilingData,
    sigma_l: SigmaL,
    a: AnnulusMap,
    a_inv: AnnulusMap,
    d: AnnulusMap,
    d_inv: AnnulusMap,
}

/// The closing deformation `σ`: `σ_L` on `ℬ′`, `σ_R` on `𝒞′`, the identity off `Ω`.
#[derive(Clone)]
pub struct Sigma(Arc<Parts>);

impl fmt::Debug for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sigma").field("q", &self.0.data.q()).finish_non_exhaustive()
    }
}

fn nan() -> LiftPoint {
    LiftPoint::new(f64::NAN, f64::NAN)
}

impl Sigma {
    fn new(data: &TilingData, sigma_l: &SigmaL) -> Self {
        let l = data.lifts();
        Self(Arc::new(Parts {
            data: data.clone(),
            sigma_l: sigma_l.clone(),
            a: l.a.clone(),
            a_inv: l.a.inverse(),
            d: l.d.clone(),
            d_inv: l.d.inverse(),
        }))
    }

    /// `σ_R = A⁻¹ ∘ σ_L⁻¹ ∘ D⁻¹` on `𝒞′`, the inverse of `σ_R⁻¹ = D ∘ σ_L ∘ A` on `𝒞`.
    pub fn sigma_r(&self, p: LiftPoint) -> Result<LiftPoint> {
        let s = &self.0;
        Ok(s.a_inv.apply(s.sigma_l.apply_inverse(s.d_inv.apply(p))?))
    }

    fn sigma_r_with_jacobian(&self, p: LiftPoint) -> Result<(LiftPoint, Mat2)> {
        let s = &self.0;
        let (y1, j1) = s.d_inv.apply_with_jacobian(p);
        let y2 = s.sigma_l.apply_inverse(y1)?;
        let (_, js) = s.sigma_l.apply_with_jacobian(y2)?;
        let (y3, j3) = s.a_inv.apply_with_jacobian(y2);
        Ok((y3, mat::mul(&j3, &mat::mul(&mat::inv(&js), &j1))))
    }

    fn forward(&self, p: LiftPoint) -> Result<(LiftPoint, Mat2)> {
        let data = &self.0.data;
        let Some(k) = data.omega_shift(p) else { return Ok((p, mat::IDENTITY)) };
        let z = p.deck(-k);
        let (w, j) =
            if is_right_of(data.gamma_star(), z) { self.sigma_r_with_jacobian(z)? } else { self.0.sigma_l.apply_with_jacobian(z)? };
        Ok((w.deck(k), j))
    }

    fn backward(&self, p: LiftPoint) -> Result<LiftPoint> {
        let s = &self.0;
        let Some(k) = s.data.omega_shift(p) else { return Ok(p) };
        let z = p.deck(-k);
        let w = if is_right_of(s.data.gamma_lift(), z) { s.d.apply(s.sigma_l.apply(s.a.apply(z))?) } else { s.sigma_l.apply_inverse(z)? };
        Ok(w.deck(k))
    }
}

impl Primitive for Sigma {
    fn tag(&self) -> &'static str {
        "closing_deformation"
    }

    fn apply(&self, p: LiftPoint) -> LiftPoint {
        self.forward(p).map(|r| r.0).unwrap_or_else(|_| nan())
    }

    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        self.backward(p).unwrap_or_else(|_| nan())
    }

    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        self.forward(p).map(|r| r.1).unwrap_or([[f64::NAN; 2]; 2])
    }

    fn closed_form(&self) -> bool {
        true
    }
}

/// `g = σ ∘ f` with its verification record.
#[derive(Debug, Clone)]
pub struct ClosureResult {
    pub data: TilingData,
    pub sigma_l: SigmaL,
    sigma_prim: Sigma,
    /// `σ` as a map of the annulus.
    pub sigma: AnnulusMap,
    /// Lift of `g` with `G^{q_{n+1}} = T^{p_{n+1}}`.
    pub g: AnnulusMap,
    /// Sampled `sup d(g^{q_{n+1}}(x), x)` over the sampling points and the curves of `Γ`.
    pub periodicity: MetricSample,
    /// `max_j d(g(Γ_j), Γ_{j+1})` with indices mod `q_{n+1}`, curve-sampled.
    pub cyclic: f64,
    /// `σ_L`, `σ_R` and `Ψ` near `γ*`.
    pub gluing: f64,
    /// `σ(γ*)` against `γ`.
    pub closing: f64,
    /// Sampled `|g − f|` on tiles `j ∉ {q_{n+1}−q_n−1, q_{n+1}−1}`.
    pub tile_law: f64,
    /// Sampling points outside `Ω` moved by `σ`.
    pub support_violations: usize,
    /// Sampled `Diff^r` distance of `σ` to the identity, when requested.
    pub sigma_smallness: Option<f64>,
}

impl ClosureResult {
    pub fn sigma_r(&self, p: LiftPoint) -> Result<LiftPoint> {
        self.sigma_prim.sigma_r(p)
    }

    pub fn q(&self) -> usize {
        self.data.q()
    }

    /// `G^{q_{n+1}}(p) − p_{n+1}`.
    pub fn return_map(&self, p: LiftPoint) -> LiftPoint {
        let mut z = p;
        for _ in 0..self.q() {
            z = self.g.apply(z);
        }
        z.deck(-self.data.combinatorics().p_next)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "sigma_l": self.sigma_l.to_json(),
            "periodicity": { "sup": self.periodicity.sup, "argmax": [self.periodicity.argmax.x, self.periodicity.argmax.y] },
            "cyclic": self.cyclic,
            "gluing": self.gluing,
            "closing": self.closing,
            "tile_law": self.tile_law,
            "support_violations": self.support_violations,
            "sigma_smallness": self.sigma_smallness,
        })
    }
}

fn sup<I: ParallelIterator<Item = f64>>(it: I) -> f64 {
    it.reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Glues `σ`, forms `g = σ ∘ f` and measures it; `r` requests the `Diff^r` size of `σ`.
pub fn assemble_g(data: &TilingData, sigma_l: &SigmaL, sampling: &Sampling, tol: &Tolerances, r: Option<usize>) -> Result<ClosureResult> {
    let prim = Sigma::new(data, sigma_l);
    let sigma = AnnulusMap::from_prim(prim.clone());
    let f = &data.lifts().f;
    let g = compose(&sigma, f);
    let comb = *data.combinatorics();
    let q = data.q();

    let star = data.gamma_star();
    let psi = sigma_l.psi_map();
    let mut gluing = 0.0f64;
    let mut closing = 0.0f64;
    let width = data.c_prime().area().min(data.b_prime().area());
    for &p in star.samples() {
        let at_l = sigma_l.apply(p)?;
        let at_r = prim.sigma_r(p)?;
        let exact = psi.apply(p);
        gluing = gluing.max(at_l.dist(exact)).max(at_r.dist(exact));
        for t in [1e-3, 1e-2] {
            let (left, right) = (LiftPoint::new(p.x - t * width, p.y), LiftPoint::new(p.x + t * width, p.y));
            gluing = gluing.max(sigma_l.apply(left)?.dist(psi.apply(left))).max(prim.sigma_r(right)?.dist(psi.apply(right)));
        }
        let img = prim.forward(p)?.0;
        closing = closing.max(point_curve_distance(data.gamma_lift(), img));
    }
    if !(gluing < tol.periodicity) {
        return Err(ClosureError::GluingMismatch { residual: gluing });
    }

    let raw = data.orbit();
    let mut cyclic = 0.0f64;
    for j in 0..q {
        let target = if j + 1 < q { raw[j + 1].clone() } else { data.gamma_lift().deck(comb.p_next) };
        for &a in raw[j].samples() {
            cyclic = cyclic.max(point_curve_distance(&target, g.apply(a)));
        }
    }

    let mut pts = sampling.points();
    for c in data.curves() {
        pts.extend_from_slice(c.samples());
    }
    let periodicity = MetricSample::over(&pts, (sampling.grid.nx, sampling.grid.ny), |p| {
        let mut z = p;
        for _ in 0..q {
            z = g.apply(z);
        }
        z.deck(-comb.p_next).annulus_dist(p)
    });

    let skip = [(comb.q_next - comb.q_n - 1) as usize, q - 1];
    let samples = sampling.points();
    let tile_law = sup(samples.par_iter().map(|&p| match data.locate(p) {
        Ok(loc) if !loc.near_seam && !skip.contains(&loc.tile) => g.apply(p).dist(f.apply(p)),
        Ok(_) => 0.0,
        Err(_) => f64::NAN,
    }));
    let support_violations = samples.par_iter().filter(|&&p| data.omega_shift(p).is_none() && sigma.apply(p) != p).count();

    let sigma_smallness = match r {
        Some(r) if r >= 1 => Some(diffr_distance(&sigma, &IdentityMap, r, sampling.grid, FD_STEP)?),
        _ => None,
    };
    Ok(ClosureResult {
        data: data.clone(),
        sigma_l: sigma_l.clone(),
        sigma_prim: prim,
        sigma,
        g,
        periodicity,
        cyclic,
        gluing,
        closing,
        tile_law,
        support_violations,
        sigma_smallness,
    })
}
