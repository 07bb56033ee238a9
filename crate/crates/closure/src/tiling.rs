use brouwer::{
    build_admissible_chart_with, curve_order_with, is_q_good_with, orbit_curves, right_of, Chart, ChartOptions, Curve, CurveOrder,
    GoodnessReport, LiftedCurve, Region,
};
use cf_arith::{BigInt, BigRational, RotationNumber};
use mapkit::{iterate, AnnulusMap, LiftPoint};
use serde_json::{json, Value};

use crate::{ClosureError, Result, Tolerances};

/// Convergent data `(p_n, q_n)`, `(p_{n+1}, q_{n+1})` for an odd index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combinatorics {
    pub n: usize,
    pub q_n: i64,
    pub p_n: i64,
    pub q_next: i64,
    pub p_next: i64,
}

fn small(v: BigInt, what: &str) -> Result<i64> {
    i64::try_from(v).map_err(|_| ClosureError::Config(format!("{what} does not fit in 64 bits")))
}

impl Combinatorics {
    pub fn new(alpha: &RotationNumber, n: usize) -> Result<Self> {
        if n % 2 == 0 {
            return Err(ClosureError::BadIndex(n));
        }
        Ok(Self {
            n,
            q_n: small(alpha.q(n)?, "q_n")?,
            p_n: small(alpha.p(n)?, "p_n")?,
            q_next: small(alpha.q(n + 1)?, "q_{n+1}")?,
            p_next: small(alpha.p(n + 1)?, "p_{n+1}")?,
        })
    }

    /// `p_{n+1}/q_{n+1}`.
    pub fn step_exact(&self) -> BigRational {
        BigRational::new(self.p_next.into(), self.q_next.into())
    }

    /// `p_{n+1} q_n − p_n q_{n+1} = −1`, hence `s^{−q_n} = R_{1/q_{n+1}}`, checked in exact integers.
    pub fn matching_shift_is_unit(&self) -> bool {
        let (pn, qn, pm, qm) = (BigInt::from(self.p_n), BigInt::from(self.q_n), BigInt::from(self.p_next), BigInt::from(self.q_next));
        let det = &pm * &qn - &pn * &qm;
        let shift = BigRational::new(-(&qn * &pm), qm.clone());
        let unit = BigRational::new(BigInt::from(1), qm);
        det == BigInt::from(-1) && (shift.clone() - shift.floor()) == unit
    }

    /// Index of the left side of `T_j = g^j(B)`: its right side is `g^j(γ)`, its left side `g^{j+q_n}(γ)`.
    pub fn left_neighbour(&self, j: usize) -> usize {
        (j + self.q_n as usize) % self.q_next as usize
    }

    /// The tile `j` with `s^j(𝒯′₀)` equal to the slot `[(c−1)/q, c/q]`: `j ≡ −c·q_n (mod q_{n+1})`.
    pub fn slot_to_tile(&self, c: i64) -> usize {
        let q = self.q_next as i128;
        ((-(c as i128) * self.q_n as i128).rem_euclid(q)) as usize
    }

    /// `j·p_{n+1}/q_{n+1}` split into an integer and a fraction, for exact bookkeeping of `s^j`.
    pub fn s_power(&self, j: i64) -> (i64, f64) {
        let jp = j as i128 * self.p_next as i128;
        let q = self.q_next as i128;
        (jp.div_euclid(q) as i64, jp.rem_euclid(q) as f64 / self.q_next as f64)
    }

    pub fn to_json(&self) -> Value {
        json!({ "n": self.n, "q_n": self.q_n, "p_n": self.p_n, "q_n1": self.q_next, "p_n1": self.p_next })
    }
}

/// Lifts of the iterates used by the construction, all built from `F`, the lift of `f` with `ρ(F) = α`.
#[derive(Debug, Clone)]
pub struct Lifts {
    pub f: AnnulusMap,
    /// `T^{−p_n} F^{q_n}`; maps `𝒞` onto `ℬ′`.
    pub a: AnnulusMap,
    /// `T^{−(p_{n+1}−p_n)} F^{q_{n+1}−q_n}`; maps `ℬ` onto `𝒞′`.
    pub d: AnnulusMap,
    /// `T^{p_{n+1}} F^{−q_{n+1}}`.
    pub psi: AnnulusMap,
    /// `T^{p_n} F^{−q_n}`, the map of the admissible chart of `ℬ`.
    pub fhat: AnnulusMap,
}

impl Lifts {
    fn new(f: AnnulusMap, c: &Combinatorics) -> Self {
        let a = iterate(&f, c.q_n).shifted(-c.p_n);
        let d = iterate(&f, c.q_next - c.q_n).shifted(-(c.p_next - c.p_n));
        let psi = iterate(&f, -c.q_next).shifted(c.p_next);
        let fhat = iterate(&f, -c.q_n).shifted(c.p_n);
        Self { f, a, d, psi, fhat }
    }
}

/// Where a point sits in the tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    /// `j` with `p ∈ T_j`.
    pub tile: usize,
    /// `k` such that `p − k` lies in the fundamental strip starting at `γ̃`.
    pub shift: i64,
    /// Within the curve tolerance of a side; the lower-index side wins.
    pub near_seam: bool,
}

/// The curves `Γ`, the regions `Ω, ℬ, 𝒞, ℬ′, 𝒞′` and the tiling `T_j = g^j(ℬ)`.
#[derive(Debug, Clone)]
pub struct TilingData {
    comb: Combinatorics,
    lifts: Lifts,
    gamma: Curve,
    gamma_lift: LiftedCurve,
    /// `F^j(γ̃)` for `0 ≤ j ≤ q_{n+1}`, on common parameters.
    raw: Vec<LiftedCurve>,
    /// `Γ̃_j`, shifted so the bottom point lies in `[x₀, x₀+1)`.
    curves: Vec<LiftedCurve>,
    /// Curve indices from left to right, starting with `0`.
    order: Vec<usize>,
    left: LiftedCurve,
    right: LiftedCurve,
    gamma_star: LiftedCurve,
    omega: Region,
    b: Region,
    c: Region,
    b_prime: Region,
    c_prime: Region,
    /// Area of `T_j`, indexed by `j`.
    tile_areas: Vec<f64>,
    goodness: GoodnessReport,
    tol: f64,
}

/// Keeps points on `B₁` inside the half-open strip seen by the crossing test.
fn probe(p: LiftPoint) -> LiftPoint {
    LiftPoint::new(p.x, p.y.clamp(0.0, 1.0 - 1e-12))
}

pub(crate) fn is_right_of(c: &LiftedCurve, p: LiftPoint) -> bool {
    right_of(c, probe(p))
}

pub(crate) fn region_contains(r: &Region, p: LiftPoint) -> bool {
    (0.0..=1.0).contains(&p.y) && is_right_of(r.left(), p) && !is_right_of(r.right(), p)
}

pub(crate) fn point_curve_distance(c: &LiftedCurve, p: LiftPoint) -> f64 {
    c.samples()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            ((a.x + t * dx - p.x).powi(2) + (a.y + t * dy - p.y).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn ordered(a: &LiftedCurve, b: &LiftedCurve, tol: f64) -> bool {
    curve_order_with(a, b, tol) == CurveOrder::Left
}

pub fn build_tiling_data(f: &AnnulusMap, gamma: &Curve, alpha: &RotationNumber, n: usize) -> Result<TilingData> {
    build_tiling_data_with(f, gamma, alpha, n, &Tolerances::default())
}

pub fn build_tiling_data_with(f: &AnnulusMap, gamma: &Curve, alpha: &RotationNumber, n: usize, tol: &Tolerances) -> Result<TilingData> {
    let comb = Combinatorics::new(alpha, n)?;
    let q = comb.q_next as usize;
    if q < 3 {
        return Err(ClosureError::Config(format!("q_{{n+1}} = {q} is too small for a tiling")));
    }
    let lift = renorm::lift_power_exact(f, alpha, 1, 0)?.base().clone();
    let goodness = is_q_good_with(&lift, gamma, q, tol.curve);
    if !goodness.good {
        return Err(ClosureError::Disjointness { q, pair: goodness.violation, separation: goodness.min_separation });
    }
    let gamma_lift = gamma.lift(0);
    let raw = orbit_curves(&lift, &gamma_lift, q + 1);
    let x0 = raw[0].samples()[0].x;
    let curves: Vec<LiftedCurve> = raw[..q].iter().map(|c| c.deck(-((c.samples()[0].x - x0).floor() as i64))).collect();

    let left = raw[comb.q_n as usize].deck(-comb.p_n);
    let right = raw[(comb.q_next - comb.q_n) as usize].deck(-(comb.p_next - comb.p_n));
    let gamma_star = raw[q].deck(-comb.p_next);
    let g0 = &raw[0];
    if !ordered(&left, g0, tol.curve) {
        return Err(ClosureError::Ordering("f^{q_n}(γ) is not to the left of γ".into()));
    }
    if !ordered(g0, &right, tol.curve) {
        return Err(ClosureError::Ordering("f^{q_{n+1}−q_n}(γ) is not to the right of γ".into()));
    }
    if !ordered(&left, &gamma_star, tol.curve) || !ordered(&gamma_star, &right, tol.curve) {
        return Err(ClosureError::GammaStarEscape(format!("separation from the sides of Ω below {}", tol.curve)));
    }

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| curves[i].samples()[0].x.total_cmp(&curves[j].samples()[0].x));
    if order[0] != 0 {
        return Err(ClosureError::Ordering("γ is not the leftmost curve of its strip".into()));
    }
    let next_of = |pos: usize| -> LiftedCurve {
        if pos + 1 < q {
            curves[order[pos + 1]].clone()
        } else {
            curves[0].deck(1)
        }
    };
    let mut tile_areas = vec![0.0; q];
    for pos in 0..q {
        let (l, r) = (order[pos], order[(pos + 1) % q]);
        if comb.left_neighbour(r) != l {
            return Err(ClosureError::Ordering(format!(
                "the curve left of f^{r}(γ) is f^{l}(γ), expected f^{}(γ)",
                comb.left_neighbour(r)
            )));
        }
        let region = Region::new(curves[l].clone(), next_of(pos))?;
        tile_areas[r] = region.area();
    }
    let sum: f64 = tile_areas.iter().sum();
    if (sum - 1.0).abs() > 1e-4 {
        return Err(ClosureError::TilingArea { sum });
    }

    let omega = Region::new(left.clone(), right.clone())?;
    let b = Region::new(left.clone(), g0.clone())?;
    let c = Region::new(g0.clone(), right.clone())?;
    let b_prime = Region::new(left.clone(), gamma_star.clone())?;
    let c_prime = Region::new(gamma_star.clone(), right.clone())?;
    Ok(TilingData {
        lifts: Lifts::new(lift, &comb),
        comb,
        gamma: gamma.clone(),
        gamma_lift,
        raw,
        curves,
        order,
        left,
        right,
        gamma_star,
        omega,
        b,
        c,
        b_prime,
        c_prime,
        tile_areas,
        goodness,
        tol: tol.curve,
    })
}

/// Admissible coordinates `φ : [0,1]² → ℬ` with `φ T = f^{−q_n} φ`, anchored on `f^{q_n}(γ)`.
pub fn tile_chart(data: &TilingData, opts: &ChartOptions) -> Result<Chart> {
    Ok(build_admissible_chart_with(&data.lifts.fhat, &data.left, opts)?)
}

impl TilingData {
    pub fn combinatorics(&self) -> &Combinatorics {
        &self.comb
    }

    pub fn lifts(&self) -> &Lifts {
        &self.lifts
    }

    pub fn gamma(&self) -> &Curve {
        &self.gamma
    }

    pub fn gamma_lift(&self) -> &LiftedCurve {
        &self.gamma_lift
    }

    /// `F^j(γ̃)` for `0 ≤ j ≤ q_{n+1}` as computed, without deck normalisation.
    pub fn orbit(&self) -> &[LiftedCurve] {
        &self.raw
    }

    /// `Γ̃_j`, normalised into the strip of `γ̃`.
    pub fn curves(&self) -> &[LiftedCurve] {
        &self.curves
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `f^{q_n}(γ)`, the left side of `Ω` and `ℬ`.
    pub fn left(&self) -> &LiftedCurve {
        &self.left
    }

    /// `f^{q_{n+1}−q_n}(γ)`, the right side of `Ω` and `𝒞`.
    pub fn right(&self) -> &LiftedCurve {
        &self.right
    }

    pub fn gamma_star(&self) -> &LiftedCurve {
        &self.gamma_star
    }

    pub fn omega(&self) -> &Region {
        &self.omega
    }

    pub fn b(&self) -> &Region {
        &self.b
    }

    pub fn c(&self) -> &Region {
        &self.c
    }

    pub fn b_prime(&self) -> &Region {
        &self.b_prime
    }

    pub fn c_prime(&self) -> &Region {
        &self.c_prime
    }

    pub fn tile_areas(&self) -> &[f64] {
        &self.tile_areas
    }

    pub fn goodness(&self) -> &GoodnessReport {
        &self.goodness
    }

    pub fn q(&self) -> usize {
        self.comb.q_next as usize
    }

    /// Deck shift `k` with `p − k ∈ Ω̃`, if any.
    pub fn omega_shift(&self, p: LiftPoint) -> Option<i64> {
        let k0 = (p.x - self.left.samples()[0].x).floor() as i64;
        [k0, k0 - 1, k0 + 1].into_iter().find(|&k| region_contains(&self.omega, p.deck(-k)))
    }

    /// The tile containing `p`.
    pub fn locate(&self, p: LiftPoint) -> Result<Location> {
        let q = self.q();
        let x0 = self.curves[0].samples()[0].x;
        let mut k = (p.x - x0).floor() as i64;
        let first = &self.curves[0];
        let closing = first.deck(1);
        let mut found = false;
        for _ in 0..4 {
            let z = p.deck(-k);
            if !is_right_of(first, z) {
                k -= 1;
            } else if is_right_of(&closing, z) {
                k += 1;
            } else {
                found = true;
                break;
            }
        }
        if !found {
            return Err(ClosureError::TileLocation { x: p.x, y: p.y });
        }
        let z = p.deck(-k);
        let (mut lo, mut hi) = (0usize, q);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if is_right_of(&self.curves[self.order[mid]], z) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (lc, rc) = (&self.curves[self.order[lo]], if hi < q { self.curves[self.order[hi]].clone() } else { closing });
        let near_seam = point_curve_distance(lc, z) < self.tol || point_curve_distance(&rc, z) < self.tol;
        let tile = if hi < q { self.order[hi] } else { 0 };
        Ok(Location { tile, shift: k, near_seam })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "combinatorics": self.comb.to_json(),
            "order": self.order,
            "tile_areas": self.tile_areas,
            "area_sum": self.tile_areas.iter().sum::<f64>(),
            "omega_area": self.omega.area(),
            "b_area": self.b.area(),
            "c_area": self.c.area(),
            "goodness": self.goodness.to_json(),
        })
    }
}
