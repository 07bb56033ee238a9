use std::sync::Arc;

use annulus_core::{mat, LiftPoint, Mat2};
use serde_json::{json, Value};

use crate::prim::{bad, get_f64, Primitive};
use crate::Result;

/// How the time-one flow of the bump Hamiltonian is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpIntegrator {
    /// The Hamiltonian is radial, so orbits are circles and the flow is an explicit rotation.
    Exact,
    /// Fixed-step classical Runge–Kutta, inverse by Newton on the discrete map.
    Rk4 { steps: u32 },
}

/// Time-one map of `H(z) = s·r²·b(|z−c|²/r²)`, `b(ρ) = exp(1 − 1/(1−ρ))` on `ρ < 1`.
///
/// Points at distance `d < r` from the centre turn about it by
/// `θ(ρ) = 2s·b(ρ)/(1−ρ)²`, so the centre rotates by `2s` radians.
/// With `copies = q` the bump is repeated at `c + (k/q, 0)`, making it commute
/// with `R_{1/q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianBump {
    cx: f64,
    cy: f64,
    radius: f64,
    strength: f64,
    copies: u32,
    integrator: BumpIntegrator,
}

fn profile(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - rho)).exp()
    }
}

impl HamiltonianBump {
    pub fn new(cx: f64, cy: f64, radius: f64, strength: f64, copies: u32) -> std::result::Result<Self, String> {
        if !(radius > 0.0) {
            return Err("radius must be positive".into());
        }
        if copies == 0 {
            return Err("copies must be >= 1".into());
        }
        if 2.0 * radius >= 1.0 / copies as f64 {
            return Err(format!("radius {radius} too large for {copies} disjoint copies"));
        }
        if cy - radius <= 0.0 || cy + radius >= 1.0 {
            return Err("support must stay inside the open annulus".into());
        }
        Ok(Self { cx: cx.rem_euclid(1.0), cy, radius, strength, copies, integrator: BumpIntegrator::Exact })
    }

    pub fn with_integrator(mut self, integrator: BumpIntegrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn integrator(&self) -> BumpIntegrator {
        self.integrator
    }

    /// Offset from the nearest copy's centre.
    fn local(&self, p: LiftPoint) -> (f64, f64) {
        let q = self.copies as f64;
        let k = ((p.x - self.cx) * q).round();
        (p.x - (self.cx + k / q), p.y - self.cy)
    }

    fn rho(&self, dx: f64, dy: f64) -> f64 {
        (dx * dx + dy * dy) / (self.radius * self.radius)
    }

    /// Turning angle and its `ρ`-derivative.
    fn angle(&self, rho: f64) -> (f64, f64) {
        if rho >= 1.0 {
            return (0.0, 0.0);
        }
        let b = profile(rho);
        let u = 1.0 - rho;
        let theta = 2.0 * self.strength * b / (u * u);
        let dtheta = 2.0 * self.strength * b * (1.0 - 2.0 * rho) / (u * u * u * u);
        (theta, dtheta)
    }

    fn turn(&self, p: LiftPoint, sign: f64) -> LiftPoint {
        let (dx, dy) = self.local(p);
        let rho = self.rho(dx, dy);
        if rho >= 1.0 {
            return p;
        }
        let (theta, _) = self.angle(rho);
        let (s, c) = (sign * theta).sin_cos();
        LiftPoint::new(p.x - dx + c * dx - s * dy, p.y - dy + s * dx + c * dy)
    }

    fn exact_jacobian(&self, p: LiftPoint, sign: f64) -> Mat2 {
        let (dx, dy) = self.local(p);
        let rho = self.rho(dx, dy);
        if rho >= 1.0 {
            return mat::IDENTITY;
        }
        let (theta, dtheta) = self.angle(rho);
        let (s, c) = (sign * theta).sin_cos();
        // d/dθ of the rotated offset, times ∇θ = sign·θ'(ρ)·2d/r².
        let (rx, ry) = (-s * dx - c * dy, c * dx - s * dy);
        let g = sign * dtheta * 2.0 / (self.radius * self.radius);
        let (gx, gy) = (g * dx, g * dy);
        [[c + rx * gx, -s + rx * gy], [s + ry * gx, c + ry * gy]]
    }

    /// Hamiltonian vector field `(∂H/∂y, −∂H/∂x)` and its derivative.
    fn field(&self, p: LiftPoint) -> ([f64; 2], Mat2) {
        let (dx, dy) = self.local(p);
        let rho = self.rho(dx, dy);
        if rho >= 1.0 {
            return ([0.0, 0.0], [[0.0; 2]; 2]);
        }
        let u = 1.0 - rho;
        let b = profile(rho);
        let b1 = -b / (u * u);
        let b2 = b * (2.0 * rho - 1.0) / (u * u * u * u);
        let k = 2.0 * self.strength * b1;
        let dk = 2.0 * self.strength * b2 * 2.0 / (self.radius * self.radius);
        let v = [k * dy, -k * dx];
        let dv = [[dy * dk * dx, k + dy * dk * dy], [-k - dx * dk * dx, -dx * dk * dy]];
        (v, dv)
    }

    /// One RK4 run over `[0, sign]` with the tangent map.
    fn rk4(&self, p: LiftPoint, steps: u32, sign: f64) -> (LiftPoint, Mat2) {
        let h = sign / steps as f64;
        let mut z = [p.x, p.y];
        let mut jac = mat::IDENTITY;
        let eval = |z: [f64; 2]| self.field(LiftPoint::new(z[0], z[1]));
        for _ in 0..steps {
            let (k1, d1) = eval(z);
            let z2 = [z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]];
            let (k2, d2) = eval(z2);
            let z3 = [z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]];
            let (k3, d3) = eval(z3);
            let z4 = [z[0] + h * k3[0], z[1] + h * k3[1]];
            let (k4, d4) = eval(z4);
            // Stage tangents: K_i = D v(z_i) · (I + c_i h K_{i−1}).
            let j1 = d1;
            let j2 = mat::mul(&d2, &add_scaled(&mat::IDENTITY, &j1, 0.5 * h));
            let j3 = mat::mul(&d3, &add_scaled(&mat::IDENTITY, &j2, 0.5 * h));
            let j4 = mat::mul(&d4, &add_scaled(&mat::IDENTITY, &j3, h));
            let mut step = mat::IDENTITY;
            for (w, ji) in [(1.0, j1), (2.0, j2), (2.0, j3), (1.0, j4)] {
                step = add_scaled(&step, &ji, h * w / 6.0);
            }
            jac = mat::mul(&step, &jac);
            for i in 0..2 {
                z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (LiftPoint::new(z[0], z[1]), jac)
    }

    fn rk4_inverse(&self, p: LiftPoint, steps: u32) -> LiftPoint {
        let (mut z, _) = self.rk4(p, steps, -1.0);
        for _ in 0..20 {
            let (fz, j) = self.rk4(z, steps, 1.0);
            let r = [fz.x - p.x, fz.y - p.y];
            if r[0].abs().max(r[1].abs()) < 1e-15 {
                break;
            }
            let d = mat::apply(&mat::inv(&j), r);
            z = LiftPoint::new(z.x - d[0], z.y - d[1]);
        }
        z
    }
}

fn add_scaled(a: &Mat2, b: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]], [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]]]
}

impl Primitive for HamiltonianBump {
    fn tag(&self) -> &'static str {
        "hamiltonian_bump"
    }
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        match self.integrator {
            BumpIntegrator::Exact => self.turn(p, 1.0),
            BumpIntegrator::Rk4 { steps } => self.rk4(p, steps, 1.0).0,
        }
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        match self.integrator {
            BumpIntegrator::Exact => self.turn(p, -1.0),
            BumpIntegrator::Rk4 { steps } => self.rk4_inverse(p, steps),
        }
    }
    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        match self.integrator {
            BumpIntegrator::Exact => self.exact_jacobian(p, 1.0),
            BumpIntegrator::Rk4 { steps } => self.rk4(p, steps, 1.0).1,
        }
    }
    fn closed_form(&self) -> bool {
        true
    }
    fn area_preserving(&self) -> bool {
        self.integrator == BumpIntegrator::Exact
    }
    fn params(&self) -> Option<Value> {
        let mut v = json!({
            "cx": self.cx, "cy": self.cy, "radius": self.radius,
            "strength": self.strength, "copies": self.copies,
        });
        if let BumpIntegrator::Rk4 { steps } = self.integrator {
            v["integrator"] = json!("rk4");
            v["steps"] = json!(steps);
        }
        Some(v)
    }
}

pub(crate) fn from_params(v: &Value) -> Result<Arc<dyn Primitive>> {
    let tag = "hamiltonian_bump";
    let copies =
        v.get("copies").map(|c| c.as_u64().ok_or_else(|| bad(tag, "`copies` must be a positive integer"))).transpose()?.unwrap_or(1);
    let b = HamiltonianBump::new(
        get_f64(tag, v, "cx")?,
        get_f64(tag, v, "cy")?,
        get_f64(tag, v, "radius")?,
        get_f64(tag, v, "strength")?,
        copies as u32,
    )
    .map_err(|m| bad(tag, m))?;
    let integ = match v.get("integrator").and_then(Value::as_str) {
        None | Some("exact") => BumpIntegrator::Exact,
        Some("rk4") => BumpIntegrator::Rk4 { steps: v.get("steps").and_then(Value::as_u64).unwrap_or(64) as u32 },
        Some(o) => return Err(bad(tag, format!("unknown integrator {o:?}"))),
    };
    Ok(Arc::new(b.with_integrator(integ)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prim::fd_jacobian;

    fn bump() -> HamiltonianBump {
        HamiltonianBump::new(0.3, 0.5, 0.2, 0.7, 1).unwrap()
    }

    #[test]
    fn centre_turns_by_twice_strength() {
        let b = bump();
        let p = LiftPoint::new(0.3 + 1e-9, 0.5);
        let q = b.apply(p);
        let ang = (q.y - 0.5).atan2(q.x - 0.3);
        assert!((ang - 1.4).abs() < 1e-5);
    }

    #[test]
    fn exact_flow_properties() {
        let b = bump();
        for &(x, y) in &[(0.31, 0.52), (0.2, 0.45), (0.45, 0.6), (0.9, 0.5)] {
            let p = LiftPoint::new(x, y);
            let q = b.apply(p);
            let back = b.apply_inverse(q);
            assert!(back.dist(p) < 1e-14);
            let j = b.jacobian(p);
            assert!((mat::det(&j) - 1.0).abs() < 1e-12);
            let fd = fd_jacobian(|z| b.apply(z), p, 1e-6);
            assert!(mat::max_abs(&mat::sub(&j, &fd)) < 1e-7, "{j:?} vs {fd:?}");
        }
        assert_eq!(b.apply(LiftPoint::new(0.9, 0.5)), LiftPoint::new(0.9, 0.5));
    }

    #[test]
    fn rk4_agrees_with_exact_flow() {
        let exact = bump();
        let rk = bump().with_integrator(BumpIntegrator::Rk4 { steps: 64 });
        for &(x, y) in &[(0.31, 0.52), (0.2, 0.45), (0.42, 0.6), (0.3, 0.38)] {
            let p = LiftPoint::new(x, y);
            assert!(exact.apply(p).dist(rk.apply(p)) < 1e-6);
            let j = rk.jacobian(p);
            let fd = fd_jacobian(|z| rk.apply(z), p, 1e-6);
            assert!(mat::max_abs(&mat::sub(&j, &fd)) < 1e-7);
            assert!((mat::det(&j) - 1.0).abs() < 1e-6);
            assert!(rk.apply_inverse(rk.apply(p)).dist(p) < 1e-13);
        }
    }

    #[test]
    fn copies_commute_with_rational_rotation() {
        let b = HamiltonianBump::new(0.1, 0.5, 0.08, 0.5, 5).unwrap();
        for &(x, y) in &[(0.12, 0.51), (0.05, 0.47), (0.33, 0.55)] {
            let p = LiftPoint::new(x, y);
            let a = b.apply(LiftPoint::new(p.x + 0.2, p.y));
            let c = b.apply(p);
            assert!((a.x - c.x - 0.2).abs() < 1e-14 && (a.y - c.y).abs() < 1e-14);
        }
        assert!(HamiltonianBump::new(0.1, 0.5, 0.11, 0.5, 5).is_err());
        assert!(HamiltonianBump::new(0.1, 0.05, 0.08, 0.5, 1).is_err());
    }
}
