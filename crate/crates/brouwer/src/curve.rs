use std::fmt::Write as _;

use mapkit::{AnnulusMap, LiftPoint};

use crate::geom::{close_pairs, Seg};
use crate::{BrouwerError, Result};

const END_TOL: f64 = 1e-9;

/// Quintic smoothstep on `[0,1]` and its derivative.
pub(crate) fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let t2 = t * t;
    let t3 = t2 * t;
    (6.0 * t3 * t2 - 15.0 * t2 * t2 + 10.0 * t3, 30.0 * t2 * t2 - 60.0 * t3 + 30.0 * t2)
}

fn check_samples(samples: &[LiftPoint]) -> Result<()> {
    if samples.len() < 2 {
        return Err(BrouwerError::BadCurve("at least two samples are needed".into()));
    }
    if samples.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(BrouwerError::BadCurve("non-finite sample".into()));
    }
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    if first.y.abs() > END_TOL || (last.y - 1.0).abs() > END_TOL {
        return Err(BrouwerError::BadCurve(format!("endpoints at y = {} and y = {}", first.y, last.y)));
    }
    let n = samples.len();
    if let Some(p) = samples[1..n - 1].iter().find(|p| !(p.y > 0.0 && p.y < 1.0)) {
        return Err(BrouwerError::BadCurve(format!("interior sample at y = {}", p.y)));
    }
    Ok(())
}

fn snapped(mut samples: Vec<LiftPoint>) -> Vec<LiftPoint> {
    let n = samples.len();
    samples[0].y = 0.0;
    samples[n - 1].y = 1.0;
    samples
}

/// A lift of a boundary-to-boundary arc: samples in `ℝ × [0,1]` from `y = 0` to `y = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCurve {
    samples: Vec<LiftPoint>,
}

impl LiftedCurve {
    pub fn new(samples: Vec<LiftPoint>) -> Result<Self> {
        check_samples(&samples)?;
        Ok(Self { samples: snapped(samples) })
    }

    pub fn samples(&self) -> &[LiftPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `T^k` applied to every sample.
    pub fn deck(&self, k: i64) -> Self {
        Self { samples: self.samples.iter().map(|p| p.deck(k)).collect() }
    }

    pub fn translated(&self, dx: f64) -> Self {
        Self { samples: self.samples.iter().map(|p| LiftPoint::new(p.x + dx, p.y)).collect() }
    }

    /// Image of the samples under the lift of `f`.
    pub fn image(&self, f: &AnnulusMap) -> Self {
        let samples = self.samples.iter().map(|&p| f.apply(p)).collect();
        Self { samples: snapped(samples) }
    }

    /// The annulus curve, normalised so that the first sample has `x ∈ [0,1)`.
    pub fn project(&self) -> Curve {
        let k = self.samples[0].x.floor() as i64;
        Curve { lift: self.deck(-k), orthogonal: false }
    }

    pub(crate) fn segments(&self, owner: usize) -> impl Iterator<Item = Seg> + '_ {
        self.samples.windows(2).enumerate().map(move |(i, w)| Seg::new(owner, i, [w[0].x, w[0].y], [w[1].x, w[1].y]))
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)))
    }

    /// Whether `y` strictly increases along the samples.
    pub fn is_graph(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].y > w[0].y)
    }

    /// Whether every sample has the same `x`.
    pub fn is_vertical(&self) -> bool {
        let x0 = self.samples[0].x;
        self.samples.iter().all(|p| p.x == x0)
    }

    /// Catmull–Rom interpolation in the uniform parameter `t ∈ [0,1]`.
    pub fn eval(&self, t: f64) -> LiftPoint {
        let n = self.samples.len();
        let s = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (s.floor() as usize).min(n - 2);
        let u = s - i as f64;
        let at = |k: i64| -> LiftPoint {
            if k < 0 {
                let (a, b) = (self.samples[0], self.samples[1]);
                LiftPoint::new(2.0 * a.x - b.x, 2.0 * a.y - b.y)
            } else if k as usize >= n {
                let (a, b) = (self.samples[n - 1], self.samples[n - 2]);
                LiftPoint::new(2.0 * a.x - b.x, 2.0 * a.y - b.y)
            } else {
                self.samples[k as usize]
            }
        };
        let i = i as i64;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let (u2, u3) = (u * u, u * u * u);
        let w = [0.5 * (-u3 + 2.0 * u2 - u), 0.5 * (3.0 * u3 - 5.0 * u2 + 2.0), 0.5 * (-3.0 * u3 + 4.0 * u2 + u), 0.5 * (u3 - u2)];
        LiftPoint::new(
            w[0] * p0.x + w[1] * p1.x + w[2] * p2.x + w[3] * p3.x,
            (w[0] * p0.y + w[1] * p1.y + w[2] * p2.y + w[3] * p3.y).clamp(0.0, 1.0),
        )
    }

    /// `n` samples of the interpolant at uniform parameters.
    pub fn resampled(&self, n: usize) -> Self {
        let n = n.max(2);
        let samples = (0..n).map(|i| self.eval(i as f64 / (n - 1) as f64)).collect();
        Self { samples: snapped(samples) }
    }

    /// No two non-adjacent segments of this lift or of its deck translates come within `tol`.
    pub fn is_simple(&self, tol: f64) -> bool {
        let mut segs: Vec<Seg> = Vec::new();
        for (owner, k) in [(0usize, 0i64), (1, 1), (2, -1)] {
            segs.extend(self.deck(k).segments(owner));
        }
        let mut simple = true;
        close_pairs(
            &mut segs,
            tol,
            |a, b| (a.owner != 0 && b.owner != 0) || (a.owner == b.owner && a.index.abs_diff(b.index) <= 1),
            |_, _, _| simple = false,
        );
        simple
    }
}

/// A simple arc in `𝔸` from `B₀` to `B₁`, stored as its lift with first sample in `[0,1) × {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    lift: LiftedCurve,
    orthogonal: bool,
}

impl Curve {
    pub fn new(samples: Vec<LiftPoint>) -> Result<Self> {
        Ok(LiftedCurve::new(samples)?.project())
    }

    /// The line `x = c` with `n` samples.
    pub fn vertical(c: f64, n: usize) -> Self {
        Self::graph(|_| c, n).into_orthogonal()
    }

    /// The graph `x = u(y)` sampled at `n` uniform heights.
    pub fn graph<U: Fn(f64) -> f64>(u: U, n: usize) -> Self {
        let n = n.max(2);
        let samples = (0..n)
            .map(|j| {
                let y = j as f64 / (n - 1) as f64;
                LiftPoint::new(u(y), y)
            })
            .collect();
        LiftedCurve { samples }.project()
    }

    fn into_orthogonal(mut self) -> Self {
        self.orthogonal = true;
        self
    }

    pub fn samples(&self) -> &[LiftPoint] {
        self.lift.samples()
    }

    pub fn len(&self) -> usize {
        self.lift.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lift.is_empty()
    }

    /// Whether the curve is known to meet both boundary circles orthogonally.
    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// The lift translated by `T^k`.
    pub fn lift(&self, k: i64) -> LiftedCurve {
        self.lift.deck(k)
    }

    pub fn eval(&self, t: f64) -> LiftPoint {
        self.lift.eval(t)
    }

    pub fn image(&self, f: &AnnulusMap) -> Curve {
        self.lift.image(f).project()
    }

    pub fn is_simple(&self, tol: f64) -> bool {
        self.lift.is_simple(tol)
    }

    /// Flattens the curve near the boundary: within height `width` of `B₀` or `B₁`
    /// the horizontal offset from the endpoint is damped by a smoothstep, so the
    /// interpolant leaves each boundary circle vertically.
    pub fn orthogonalized(&self, width: f64) -> Curve {
        let s = self.samples();
        let (x0, x1) = (s[0].x, s[s.len() - 1].x);
        let samples = s
            .iter()
            .map(|p| {
                let mut x = p.x;
                if p.y < width {
                    x = x0 + (x - x0) * smoothstep(p.y / width).0;
                }
                if 1.0 - p.y < width {
                    x = x1 + (x - x1) * smoothstep((1.0 - p.y) / width).0;
                }
                LiftPoint::new(x, p.y)
            })
            .collect();
        Curve { lift: LiftedCurve { samples }, orthogonal: true }
    }

    /// CSV with header `t,x,y`, `t` the uniform sample parameter.
    pub fn to_csv(&self) -> String {
        let n = self.len();
        let mut out = String::from("t,x,y\n");
        for (i, p) in self.samples().iter().enumerate() {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let _ = writeln!(out, "{t:.16e},{:.16e},{:.16e}", p.x, p.y);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Curve> {
        let mut samples = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with('t')) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(BrouwerError::BadCurve(format!("line {}: expected 3 columns", ln + 1)));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| BrouwerError::BadCurve(format!("line {}: {e}", ln + 1)));
            samples.push(LiftPoint::new(num(cols[1])?, num(cols[2])?));
        }
        Curve::new(samples)
    }
}

/// `x = c(y)` for a graph curve, as a cubic Hermite interpolant in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphProfile {
    y: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
}

impl GraphProfile {
    pub fn new(curve: &LiftedCurve) -> Option<Self> {
        if !curve.is_graph() {
            return None;
        }
        let y: Vec<f64> = curve.samples().iter().map(|p| p.y).collect();
        let x: Vec<f64> = curve.samples().iter().map(|p| p.x).collect();
        let n = y.len();
        let slope = |i: usize| (x[i + 1] - x[i]) / (y[i + 1] - y[i]);
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![slope(0); 2];
        } else {
            for i in 1..n - 1 {
                let (h0, h1) = (y[i] - y[i - 1], y[i + 1] - y[i]);
                d[i] = (slope(i - 1) * h1 + slope(i) * h0) / (h0 + h1);
            }
            let (h0, h1) = (y[1] - y[0], y[2] - y[1]);
            d[0] = ((2.0 * h0 + h1) * slope(0) - h0 * slope(1)) / (h0 + h1);
            let (h0, h1) = (y[n - 2] - y[n - 3], y[n - 1] - y[n - 2]);
            d[n - 1] = ((2.0 * h1 + h0) * slope(n - 2) - h1 * slope(n - 3)) / (h0 + h1);
        }
        Some(Self { y, x, d })
    }

    /// `(c(y), c'(y))`, clamped to `y ∈ [0,1]`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let y = y.clamp(0.0, 1.0);
        let n = self.y.len();
        let i = match self.y.binary_search_by(|v| v.total_cmp(&y)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.y[i + 1] - self.y[i];
        let s = (y - self.y[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (g00, g10, g01, g11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
        let (x0, x1, d0, d1) = (self.x[i], self.x[i + 1], self.d[i], self.d[i + 1]);
        (h00 * x0 + h * h10 * d0 + h01 * x1 + h * h11 * d1, (g00 * x0 + g01 * x1) / h + g10 * d0 + g11 * d1)
    }
}
