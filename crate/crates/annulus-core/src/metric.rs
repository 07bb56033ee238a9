use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_signed, LiftPoint};
use crate::map::{mat, LiftMap};
use crate::AnnulusError;

/// Default finite-difference step.
pub const FD_STEP: f64 = 1.0 / 1024.0;

/// Uniform grid `x = i/nx`, `y = j/(ny−1)` on `[0,1) × [0,1]`, both boundary circles included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub nx: usize,
    pub ny: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self { nx: 256, ny: 33 }
    }
}

impl SampleGrid {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx >= 1 && ny >= 2, "grid needs nx >= 1 and ny >= 2");
        Self { nx, ny }
    }

    /// Dyadic refinement containing every point of `self`.
    pub fn refine(self) -> Self {
        Self { nx: self.nx * 2, ny: (self.ny - 1) * 2 + 1 }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> LiftPoint {
        let (j, i) = (idx / self.nx, idx % self.nx);
        LiftPoint::new(i as f64 / self.nx as f64, j as f64 / (self.ny - 1) as f64)
    }

    pub fn points(&self) -> Vec<LiftPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// A sampled supremum with its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub resolution: (usize, usize),
    pub sup: f64,
    pub argmax: LiftPoint,
}

impl MetricSample {
    /// Sup of `value` over `points`; ties resolve to the earliest point.
    pub fn over<F>(points: &[LiftPoint], resolution: (usize, usize), value: F) -> Self
    where
        F: Fn(LiftPoint) -> f64 + Sync,
    {
        let best = points.par_iter().enumerate().map(|(i, &p)| (value(p), i)).reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                // NaN counts as the largest value so that it cannot hide.
                let a_big = a.0.is_nan() || a.0 > b.0;
                let b_big = b.0.is_nan() || b.0 > a.0;
                match (a_big, b_big) {
                    (true, false) => a,
                    (false, true) => b,
                    _ => {
                        if a.1 <= b.1 {
                            a
                        } else {
                            b
                        }
                    }
                }
            },
        );
        let argmax = points.get(best.1).copied().unwrap_or_default();
        let sup = if best.0.is_nan() { f64::NAN } else { best.0.max(0.0) };
        Self { resolution, sup, argmax }
    }
}

/// Sampled `sup_x d_𝔸(f(x), g(x))`.
pub fn c0_distance(f: &dyn LiftMap, g: &dyn LiftMap, grid: SampleGrid) -> MetricSample {
    MetricSample::over(&grid.points(), (grid.nx, grid.ny), |p| f.apply(p).annulus_dist(g.apply(p)))
}

/// Sampled `sup |F − G|` for the distinguished lifts.
pub fn lift_sup_distance(f: &dyn LiftMap, g: &dyn LiftMap, grid: SampleGrid) -> MetricSample {
    MetricSample::over(&grid.points(), (grid.nx, grid.ny), |p| f.apply(p).dist(g.apply(p)))
}

/// Integer `k` such that `T^k ∘ F` is the lift with `‖T^kF − Id‖ < 1/2`.
pub fn principal_lift_offset(f: &dyn LiftMap, grid: SampleGrid) -> Result<i64, AnnulusError> {
    let pts = grid.points();
    let d = MetricSample::over(&pts, (grid.nx, grid.ny), |p| f.apply(p).annulus_dist(p));
    if !(d.sup < 0.5) {
        return Err(AnnulusError::NotCloseToIdentity { sup: d.sup, x: d.argmax.x, y: d.argmax.y });
    }
    let p0 = pts[0];
    let dx = f.apply(p0).x - p0.x;
    let k = (wrap_signed(dx) - dx).round() as i64;
    // A single lift must work at every sample.
    let worst = MetricSample::over(&pts, (grid.nx, grid.ny), |p| f.apply(p).deck(k).dist(p));
    if !(worst.sup < 0.5) {
        return Err(AnnulusError::NotCloseToIdentity { sup: worst.sup, x: worst.argmax.x, y: worst.argmax.y });
    }
    Ok(k)
}

type Jet = Vec<f64>;

fn value_diff(f: &dyn LiftMap, g: &dyn LiftMap, p: LiftPoint, inverse: bool) -> [f64; 2] {
    let (a, b) = if inverse { (f.apply_inverse(p), g.apply_inverse(p)) } else { (f.apply(p), g.apply(p)) };
    [a.x - b.x, a.y - b.y]
}

fn first_derivative(f: &dyn LiftMap, g: &dyn LiftMap, p: LiftPoint, inverse: bool, h: f64) -> Jet {
    let jac = |m: &dyn LiftMap| if inverse { m.inverse_jacobian(p) } else { m.jacobian(p) };
    if let (Some(a), Some(b)) = (jac(f), jac(g)) {
        let d = mat::sub(&a, &b);
        return vec![d[0][0], d[0][1], d[1][0], d[1][1]];
    }
    let fx = stencil(p, 0, h, |q| value_diff(f, g, q, inverse).to_vec());
    let fy = stencil(p, 1, h, |q| value_diff(f, g, q, inverse).to_vec());
    vec![fx[0], fy[0], fx[1], fy[1]]
}

/// Central difference along axis `dir`, one-sided second-order near `y ∈ {0,1}`.
fn stencil<F: Fn(LiftPoint) -> Jet>(p: LiftPoint, dir: usize, h: f64, phi: F) -> Jet {
    let shift = |s: f64| {
        if dir == 0 {
            LiftPoint::new(p.x + s, p.y)
        } else {
            LiftPoint::new(p.x, p.y + s)
        }
    };
    let combine = |terms: &[(f64, Jet)], scale: f64| -> Jet {
        let n = terms[0].1.len();
        (0..n).map(|k| terms.iter().map(|(c, v)| c * v[k]).sum::<f64>() / scale).collect()
    };
    if dir == 1 && p.y - h < 0.0 {
        combine(&[(-3.0, phi(p)), (4.0, phi(shift(h))), (-1.0, phi(shift(2.0 * h)))], 2.0 * h)
    } else if dir == 1 && p.y + h > 1.0 {
        combine(&[(3.0, phi(p)), (-4.0, phi(shift(-h))), (1.0, phi(shift(-2.0 * h)))], 2.0 * h)
    } else {
        combine(&[(1.0, phi(shift(h))), (-1.0, phi(shift(-h)))], 2.0 * h)
    }
}

fn derivative_jet(f: &dyn LiftMap, g: &dyn LiftMap, p: LiftPoint, order: usize, inverse: bool, h: f64) -> Jet {
    if order == 1 {
        return first_derivative(f, g, p, inverse, h);
    }
    let mut out = stencil(p, 0, h, |q| derivative_jet(f, g, q, order - 1, inverse, h));
    out.extend(stencil(p, 1, h, |q| derivative_jet(f, g, q, order - 1, inverse, h)));
    out
}

/// Sampled sup of all order-`order` partial derivatives of `F − G` (or `F⁻¹ − G⁻¹`).
pub fn derivative_sup(
    f: &dyn LiftMap,
    g: &dyn LiftMap,
    order: usize,
    grid: SampleGrid,
    inverse: bool,
    h: f64,
) -> Result<MetricSample, AnnulusError> {
    if order == 0 {
        return Err(AnnulusError::BadOrder);
    }
    Ok(MetricSample::over(&grid.points(), (grid.nx, grid.ny), |p| {
        derivative_jet(f, g, p, order, inverse, h).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }))
}

/// Sampled `Diff^r` distance: the max of the two C⁰ terms and all derivative terms of order `1..=r`.
pub fn diffr_distance(f: &dyn LiftMap, g: &dyn LiftMap, r: usize, grid: SampleGrid, h: f64) -> Result<f64, AnnulusError> {
    if r == 0 {
        return Err(AnnulusError::BadOrder);
    }
    let pts = grid.points();
    let res = (grid.nx, grid.ny);
    let mut d = c0_distance(f, g, grid).sup;
    d = d.max(MetricSample::over(&pts, res, |p| f.apply_inverse(p).annulus_dist(g.apply_inverse(p))).sup);
    for k in 1..=r {
        for inverse in [false, true] {
            d = d.max(derivative_sup(f, g, k, grid, inverse, h)?.sup);
        }
    }
    Ok(d)
}
