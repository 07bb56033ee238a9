use mapkit::{AnnulusMap, LiftPoint};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::curve::{Curve, LiftedCurve};
use crate::geom::{close_pairs, Seg};
use crate::order::SEPARATION_TOL;

/// Outcome of a `Q`-goodness check.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessReport {
    pub good: bool,
    pub q: usize,
    pub tolerance: f64,
    /// Minimal sampled distance in `𝔸` between distinct iterates.
    pub min_separation: f64,
    /// Iterate indices `(i, j)`, `i < j`, realising `min_separation`.
    pub closest: Option<(usize, usize)>,
    /// Lexicographically first pair closer than `tolerance`.
    pub violation: Option<(usize, usize)>,
    /// Largest `Q′ ≤ q` for which the sampled curve is `Q′`-good.
    pub good_up_to: usize,
}

impl GoodnessReport {
    pub fn to_json(&self) -> Value {
        json!({
            "good": self.good,
            "q": self.q,
            "tolerance": self.tolerance,
            "min_separation": self.min_separation,
            "closest": self.closest.map(|(i, j)| vec![i, j]),
            "violation": self.violation.map(|(i, j)| vec![i, j]),
            "good_up_to": self.good_up_to,
        })
    }
}

/// Longest image segment kept by [`orbit_curves`] before bisecting.
pub const ORBIT_SEGMENT: f64 = 1.0 / 64.0;
const MAX_DEPTH: u32 = 10;

fn orbit(f: &AnnulusMap, p: LiftPoint, q: usize) -> Vec<LiftPoint> {
    let mut out = Vec::with_capacity(q);
    let mut z = p;
    for j in 0..q {
        if j > 0 {
            z = f.apply(z);
        }
        out.push(z);
    }
    out
}

fn longest(a: &[LiftPoint], b: &[LiftPoint]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p.x - q.x).hypot(p.y - q.y)).fold(0.0, f64::max)
}

/// Orbits at parameters in `[t0, t1]`, excluding `t0`, bisected until every image segment is short.
fn refine(
    f: &AnnulusMap,
    gamma: &LiftedCurve,
    q: usize,
    (t0, o0): (f64, &[LiftPoint]),
    (t1, o1): (f64, Vec<LiftPoint>),
    depth: u32,
) -> Vec<Vec<LiftPoint>> {
    if depth >= MAX_DEPTH || longest(o0, &o1) <= ORBIT_SEGMENT {
        return vec![o1];
    }
    let tm = 0.5 * (t0 + t1);
    let om = orbit(f, gamma.eval(tm), q);
    let mut left = refine(f, gamma, q, (t0, o0), (tm, om), depth + 1);
    let last = left.last().expect("refinement yields at least one orbit").clone();
    left.extend(refine(f, gamma, q, (tm, &last), (t1, o1), depth + 1));
    left
}

/// Lifted iterates `F^j(γ̃)`, `0 ≤ j < q`. Segments of the interpolated curve are
/// bisected until every image segment is at most [`ORBIT_SEGMENT`] long.
pub fn orbit_curves(f: &AnnulusMap, gamma: &LiftedCurve, q: usize) -> Vec<LiftedCurve> {
    let s = gamma.samples();
    let last = (s.len() - 1) as f64;
    let base: Vec<Vec<LiftPoint>> = s.par_iter().map(|&p| orbit(f, p, q)).collect();
    let pieces: Vec<Vec<Vec<LiftPoint>>> = (0..s.len() - 1)
        .into_par_iter()
        .map(|i| refine(f, gamma, q, (i as f64 / last, &base[i]), ((i + 1) as f64 / last, base[i + 1].clone()), 0))
        .collect();
    let mut orbits = vec![base[0].clone()];
    orbits.extend(pieces.into_iter().flatten());
    (0..q)
        .map(|j| {
            LiftedCurve::new(orbits.iter().map(|o| o[j]).collect()).expect("iterates of boundary-preserving maps keep their endpoints")
        })
        .collect()
}

/// Minimal pairwise separation of curves in `𝔸` (distinct owners), with
/// every pair closer than `tol`.
pub(crate) fn annulus_separation(curves: &[LiftedCurve], tol: f64) -> (f64, Option<(usize, usize)>, Option<(usize, usize)>, usize) {
    let q = curves.len();
    let mut segs: Vec<Seg> = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        segs.extend(c.segments(i).map(|s| s.shifted(-s.xmin().floor())));
    }
    // Any `q` arcs meet `B₀` at points with a gap of at most `1/q`.
    let margin = 1.0 / q as f64 + tol;
    let width = segs.iter().map(|s| s.xmax() - s.xmin()).fold(0.0, f64::max);
    let wrapped: Vec<Seg> = segs.iter().filter(|s| s.xmin() < width + margin).map(|s| s.shifted(1.0)).collect();
    segs.extend(wrapped);
    let mut best = (f64::INFINITY, None);
    let mut violation: Option<(usize, usize)> = None;
    let mut good_up_to = q;
    close_pairs(
        &mut segs,
        margin,
        |a, b| a.owner == b.owner,
        |a, b, d| {
            let pair = (a.owner.min(b.owner), a.owner.max(b.owner));
            if d < best.0 || (d == best.0 && Some(pair) < best.1) {
                best = (d, Some(pair));
            }
            if d < tol {
                good_up_to = good_up_to.min(pair.1 - pair.0);
                if violation.map_or(true, |v| pair < v) {
                    violation = Some(pair);
                }
            }
        },
    );
    (best.0, best.1, violation, good_up_to)
}

/// Whether `γ, f(γ), …, f^{q−1}(γ)` are pairwise disjoint, with the default separation tolerance.
pub fn is_q_good(f: &AnnulusMap, gamma: &Curve, q: usize) -> GoodnessReport {
    is_q_good_with(f, gamma, q, SEPARATION_TOL)
}

pub fn is_q_good_with(f: &AnnulusMap, gamma: &Curve, q: usize, tol: f64) -> GoodnessReport {
    if q < 2 {
        return GoodnessReport {
            good: true,
            q,
            tolerance: tol,
            min_separation: f64::INFINITY,
            closest: None,
            violation: None,
            good_up_to: q,
        };
    }
    let curves = orbit_curves(f, &gamma.lift(0), q);
    report_for(&curves, tol)
}

pub(crate) fn report_for(curves: &[LiftedCurve], tol: f64) -> GoodnessReport {
    let (sep, closest, violation, good_up_to) = annulus_separation(curves, tol);
    GoodnessReport { good: violation.is_none(), q: curves.len(), tolerance: tol, min_separation: sep, closest, violation, good_up_to }
}
