use mapkit::LiftPoint;

use crate::curve::LiftedCurve;
use crate::geom::{close_pairs, Seg};
use crate::{BrouwerError, Result};

/// Position of one lifted curve relative to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveOrder {
    /// The first curve lies to the left of the second.
    Left,
    Right,
    Intersecting,
}

/// Separation below which two curves count as intersecting.
pub const SEPARATION_TOL: f64 = 1e-7;

/// Minimal sampled distance between two lifted curves, capped at `cap`.
pub fn separation(a: &LiftedCurve, b: &LiftedCurve, cap: f64) -> f64 {
    let mut segs: Vec<Seg> = a.segments(0).chain(b.segments(1)).collect();
    let mut best = cap;
    close_pairs(&mut segs, cap, |s, t| s.owner == t.owner, |_, _, d| best = best.min(d));
    best
}

/// Crossings of the horizontal ray from `p` towards `x = −∞` with `c`.
fn crossings_left(c: &LiftedCurve, p: LiftPoint) -> usize {
    c.samples()
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0], w[1]);
            if (a.y <= p.y) == (b.y <= p.y) {
                return false;
            }
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            x < p.x
        })
        .count()
}

/// Whether `p` lies in the right component of `ℝ × [0,1] ∖ c`.
pub fn right_of(c: &LiftedCurve, p: LiftPoint) -> bool {
    crossings_left(c, p) % 2 == 1
}

/// Orders disjoint lifted curves by the component of the complement of `a` that contains `b`.
pub fn curve_order(a: &LiftedCurve, b: &LiftedCurve) -> CurveOrder {
    curve_order_with(a, b, SEPARATION_TOL)
}

pub fn curve_order_with(a: &LiftedCurve, b: &LiftedCurve, tol: f64) -> CurveOrder {
    if separation(a, b, tol) < tol {
        return CurveOrder::Intersecting;
    }
    let s = b.samples();
    let probe = s[s.len() / 2];
    let probe = if probe.y > 0.0 && probe.y < 1.0 {
        probe
    } else {
        let (p, q) = (s[0], s[1]);
        LiftPoint::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y))
    };
    if right_of(a, probe) {
        CurveOrder::Left
    } else {
        CurveOrder::Right
    }
}

/// The closed strip between two disjoint lifted curves, `left` to the left of `right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    left: LiftedCurve,
    right: LiftedCurve,
    area: f64,
}

/// `∮ x dy` along the samples.
fn x_dy(c: &LiftedCurve) -> f64 {
    c.samples().windows(2).map(|w| 0.5 * (w[0].x + w[1].x) * (w[1].y - w[0].y)).sum()
}

impl Region {
    pub fn new(left: LiftedCurve, right: LiftedCurve) -> Result<Self> {
        match curve_order(&left, &right) {
            CurveOrder::Left => {}
            o => return Err(BrouwerError::BadRegion(format!("boundary curves are ordered {o:?}"))),
        }
        // Polygon: up the right curve, back down the left; horizontal edges add nothing.
        let area = x_dy(&right) - x_dy(&left);
        Ok(Self { left, right, area })
    }

    pub fn left(&self) -> &LiftedCurve {
        &self.left
    }

    pub fn right(&self) -> &LiftedCurve {
        &self.right
    }

    /// Polygonal area; positive for a positively oriented boundary.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// `+1` when the boundary (right curve upwards, left curve downwards) is counter-clockwise.
    pub fn orientation(&self) -> f64 {
        self.area.signum()
    }

    /// Closed-region membership up to the sampled boundary.
    pub fn contains(&self, p: LiftPoint) -> bool {
        if !(0.0..=1.0).contains(&p.y) {
            return false;
        }
        right_of(&self.left, p) && !right_of(&self.right, p)
    }
}
