use annulus_core::{mat, LiftPoint, Mat2};
use brouwer::{extend_chart, Chart, ExtendedChart};
use serde_json::{json, Value};

use crate::lift::LiftPower;
use crate::{RenormError, Result};

/// Largest number of window-sized steps taken when evaluating `H` far from the window.
const MAX_HOPS: i64 = 1 << 16;

/// `H` with `F_n H = H T`, extended from an admissible chart of `(Ω_n, F_n)`.
#[derive(Debug, Clone)]
pub struct RenormContext {
    lift: LiftPower,
    n: i64,
    floor_n_alpha: i64,
    ext: ExtendedChart,
    residual: f64,
}

fn chart_mismatch(chart: &Chart, f_n: &LiftPower) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..8 {
        for j in 0..=8 {
            let p = chart.eval(i as f64 / 8.0, j as f64 / 8.0);
            worst = worst.max(chart.map().apply(p).dist(f_n.apply(p)));
        }
    }
    worst
}

pub fn build_h(chart: &Chart, lift: &LiftPower, n: i64) -> Result<RenormContext> {
    build_h_with(chart, lift, n, 2)
}

/// `lift` supplies `F₁`; the chart must be built for `F_n = F^{n, −⌊nα⌋}`.
pub fn build_h_with(chart: &Chart, lift: &LiftPower, n: i64, window: i64) -> Result<RenormContext> {
    let base = lift.with_powers(1, 0);
    let f_n = base.f_n(n)?;
    let mismatch = chart_mismatch(chart, &f_n);
    if mismatch > 1e-9 {
        return Err(RenormError::ChartMismatch { residual: mismatch });
    }
    let ext = extend_chart(chart, window.max(1));
    let mut ctx = RenormContext { lift: base, n, floor_n_alpha: -f_n.b(), ext, residual: 0.0 };
    ctx.residual = ctx.equation_residual(16);
    Ok(ctx)
}

impl RenormContext {
    /// The lift `F₁`.
    pub fn lift(&self) -> &LiftPower {
        &self.lift
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    /// `⌊nα⌋`.
    pub fn floor_n_alpha(&self) -> i64 {
        self.floor_n_alpha
    }

    pub fn window(&self) -> i64 {
        self.ext.window()
    }

    pub fn chart(&self) -> &Chart {
        self.ext.chart()
    }

    /// Sampled `sup |F_n H(u,v) − H T(u,v)|` over the window, measured at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn equation_residual(&self, per_unit: usize) -> f64 {
        let f_n = self.chart().map();
        let k = self.window();
        let mut worst = 0.0f64;
        for i in 0..(2 * k as usize * per_unit) {
            let u = -(k as f64) + i as f64 / per_unit as f64;
            for j in 0..=8 {
                let v = j as f64 / 8.0;
                if let (Ok(a), Ok(b)) = (self.h(u, v), self.h(u + 1.0, v)) {
                    worst = worst.max(f_n.apply(a).dist(b));
                }
            }
        }
        worst
    }

    /// `H(u, v)` on `[−window, window + 1] × [0,1]`.
    pub fn h(&self, u: f64, v: f64) -> Result<LiftPoint> {
        Ok(self.ext.eval(u, v)?)
    }

    pub fn h_inverse(&self, p: LiftPoint) -> Result<(f64, f64)> {
        Ok(self.ext.inverse(p)?)
    }

    /// `HJ(x, y) = H(−x, y)`.
    pub fn hj(&self, x: f64, y: f64) -> Result<LiftPoint> {
        self.h(-x, y)
    }

    pub fn hj_inverse(&self, p: LiftPoint) -> Result<LiftPoint> {
        let (u, v) = self.h_inverse(p)?;
        Ok(LiftPoint::new(-u, v))
    }

    /// Splits `u = u₀ + hops·w` with `u₀` inside the window.
    fn hops(&self, u: f64) -> Result<(f64, i64)> {
        let w = self.window();
        if !u.is_finite() {
            return Err(RenormError::WindowExceeded { u, window: w });
        }
        let mut hops = 0i64;
        let mut u0 = u;
        if u0 > (w + 1) as f64 {
            hops = ((u0 - (w + 1) as f64) / w as f64).ceil() as i64;
        } else if u0 < -(w as f64) {
            hops = -((-(w as f64) - u0) / w as f64).ceil() as i64;
        }
        if hops.abs() > MAX_HOPS {
            return Err(RenormError::WindowExceeded { u, window: w * MAX_HOPS });
        }
        u0 -= (hops * w) as f64;
        Ok((u0, hops))
    }

    fn hop_map(&self, hops: i64) -> &mapkit::AnnulusMap {
        let w = self.window();
        self.ext.power(if hops > 0 { w } else { -w })
    }

    /// `H` anywhere on the cover, stepping by `F_n^{±window}` outside the window.
    pub fn h_unbounded(&self, u: f64, v: f64) -> Result<LiftPoint> {
        let (u0, hops) = self.hops(u)?;
        let mut p = self.h(u0, v)?;
        if hops != 0 {
            let step = self.hop_map(hops);
            for _ in 0..hops.abs() {
                p = step.apply(p);
            }
        }
        Ok(p)
    }

    pub fn h_unbounded_with_jacobian(&self, u: f64, v: f64) -> Result<(LiftPoint, Mat2)> {
        let (u0, hops) = self.hops(u)?;
        let (mut p, mut d) = self.ext.eval_with_jacobian(u0, v)?;
        if hops != 0 {
            let step = self.hop_map(hops);
            for _ in 0..hops.abs() {
                let (q, dq) = step.apply_with_jacobian(p);
                p = q;
                d = mat::mul(&dq, &d);
            }
        }
        Ok((p, d))
    }

    /// Shear estimate of the `u`-coordinate of `p`.
    fn u_guess(&self, p: LiftPoint) -> f64 {
        let chart = self.chart();
        if let Some((c, beta)) = chart.rigid() {
            return (p.x - c) / beta;
        }
        (p.x - chart.left().samples()[0].x) / chart.jacobian()
    }

    pub fn h_inverse_unbounded(&self, p: LiftPoint) -> Result<(f64, f64)> {
        let w = self.window();
        let (_, hops) = self.hops(self.u_guess(p))?;
        let mut q = p;
        if hops != 0 {
            let back = self.ext.power(if hops > 0 { -w } else { w });
            for _ in 0..hops.abs() {
                q = back.apply(q);
            }
        }
        let (u, v) = self.h_inverse(q)?;
        Ok((u + (hops * w) as f64, v))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "floor_n_alpha": self.floor_n_alpha,
            "window": self.window(),
            "jacobian": self.chart().jacobian(),
            "rigid": self.chart().rigid().is_some(),
            "residual": self.residual,
        })
    }
}
