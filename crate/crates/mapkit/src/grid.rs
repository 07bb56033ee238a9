use std::sync::Arc;

use annulus_core::{mat, LiftPoint, Mat2};
use serde_json::{json, Value};

use crate::prim::{bad, Primitive};
use crate::Result;

/// `F(x,y) = (x,y) + d(x,y)` with `d` sampled on `x = i/nx` (periodic), `y = j/(ny−1)`
/// and interpolated by bicubic Catmull–Rom splines.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    nx: usize,
    ny: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

fn weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let (t2, t3) = (t * t, t * t * t);
    (
        [0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)],
        [0.5 * (-3.0 * t2 + 4.0 * t - 1.0), 0.5 * (9.0 * t2 - 10.0 * t), 0.5 * (-9.0 * t2 + 8.0 * t + 1.0), 0.5 * (3.0 * t2 - 2.0 * t)],
    )
}

impl GridMap {
    pub fn new(nx: usize, ny: usize, dx: Vec<f64>, dy: Vec<f64>) -> std::result::Result<Self, String> {
        if nx < 4 || ny < 4 {
            return Err("grid needs at least 4×4 nodes".into());
        }
        if dx.len() != nx * ny || dy.len() != nx * ny {
            return Err(format!("expected {} samples per component", nx * ny));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Samples the displacement of `f` at the grid nodes.
    pub fn from_fn<F: Fn(LiftPoint) -> LiftPoint>(nx: usize, ny: usize, f: F) -> Self {
        let mut dx = Vec::with_capacity(nx * ny);
        let mut dy = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = LiftPoint::new(i as f64 / nx as f64, j as f64 / (ny - 1) as f64);
                let q = f(p);
                dx.push(q.x - p.x);
                dy.push(q.y - p.y);
            }
        }
        Self::new(nx, ny, dx, dy).expect("consistent sizes")
    }

    /// Node value with periodic `x` and linear ghost rows beyond `y ∈ [0,1]`.
    fn node(&self, field: &[f64], i: i64, j: i64) -> f64 {
        let i = i.rem_euclid(self.nx as i64) as usize;
        let last = self.ny as i64 - 1;
        if j < 0 {
            2.0 * self.node(field, i as i64, 0) - self.node(field, i as i64, -j)
        } else if j > last {
            2.0 * self.node(field, i as i64, last) - self.node(field, i as i64, 2 * last - j)
        } else {
            field[j as usize * self.nx + i]
        }
    }

    /// Interpolated displacement and its gradient.
    fn sample(&self, field: &[f64], p: LiftPoint) -> (f64, f64, f64) {
        let u = p.x * self.nx as f64;
        let v = p.y * (self.ny - 1) as f64;
        let i0 = u.floor();
        let j0 = v.floor().clamp(0.0, (self.ny - 2) as f64);
        let (wx, dwx) = weights(u - i0);
        let (wy, dwy) = weights(v - j0);
        let (i0, j0) = (i0 as i64, j0 as i64);
        let (mut val, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for b in 0..4 {
            for a in 0..4 {
                let f = self.node(field, i0 - 1 + a as i64, j0 - 1 + b as i64);
                val += wx[a] * wy[b] * f;
                gx += dwx[a] * wy[b] * f;
                gy += wx[a] * dwy[b] * f;
            }
        }
        (val, gx * self.nx as f64, gy * (self.ny - 1) as f64)
    }
}

impl Primitive for GridMap {
    fn tag(&self) -> &'static str {
        "grid_map"
    }
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        let (a, _, _) = self.sample(&self.dx, p);
        let (b, _, _) = self.sample(&self.dy, p);
        LiftPoint::new(p.x + a, p.y + b)
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        let d = self.apply(p);
        let mut z = LiftPoint::new(2.0 * p.x - d.x, 2.0 * p.y - d.y);
        for _ in 0..20 {
            let fz = self.apply(z);
            let r = [fz.x - p.x, fz.y - p.y];
            if r[0].abs().max(r[1].abs()) < 1e-12 {
                break;
            }
            let step = mat::apply(&mat::inv(&self.jacobian(z)), r);
            z = LiftPoint::new(z.x - step[0], z.y - step[1]);
        }
        z
    }
    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        let (_, ax, ay) = self.sample(&self.dx, p);
        let (_, bx, by) = self.sample(&self.dy, p);
        [[1.0 + ax, ay], [bx, 1.0 + by]]
    }
    fn closed_form(&self) -> bool {
        true
    }
    fn params(&self) -> Option<Value> {
        Some(json!({ "nx": self.nx, "ny": self.ny, "dx": self.dx, "dy": self.dy }))
    }
}

pub(crate) fn from_params(v: &Value) -> Result<Arc<dyn Primitive>> {
    let tag = "grid_map";
    let size = |k: &str| v.get(k).and_then(Value::as_u64).map(|n| n as usize).ok_or_else(|| bad(tag, format!("missing `{k}`")));
    let arr = |k: &str| -> Result<Vec<f64>> {
        v.get(k)
            .and_then(Value::as_array)
            .ok_or_else(|| bad(tag, format!("missing `{k}`")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad(tag, "samples must be numbers")))
            .collect()
    };
    let g = GridMap::new(size("nx")?, size("ny")?, arr("dx")?, arr("dy")?).map_err(|m| bad(tag, m))?;
    Ok(Arc::new(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth(p: LiftPoint) -> LiftPoint {
        let s = (2.0 * PI * p.x).sin();
        LiftPoint::new(p.x + 0.02 * s * (PI * p.y).cos(), p.y + 0.01 * s * (PI * p.y).sin())
    }

    #[test]
    fn interpolates_nodes_exactly() {
        let g = GridMap::from_fn(32, 17, smooth);
        for (i, j) in [(0, 0), (5, 3), (31, 16)] {
            let p = LiftPoint::new(i as f64 / 32.0, j as f64 / 16.0);
            assert!(g.apply(p).dist(smooth(p)) < 1e-15);
        }
    }

    #[test]
    fn approximates_smooth_field() {
        let g = GridMap::from_fn(64, 33, smooth);
        let p = LiftPoint::new(0.3711, 0.6123);
        assert!(g.apply(p).dist(smooth(p)) < 1e-5);
        assert!(g.apply(LiftPoint::new(p.x + 1.0, p.y)).dist(LiftPoint::new(g.apply(p).x + 1.0, g.apply(p).y)) < 1e-12);
    }

    #[test]
    fn newton_inverse() {
        let g = GridMap::from_fn(64, 33, smooth);
        for &(x, y) in &[(0.1, 0.2), (0.77, 0.95), (0.5, 0.0), (0.25, 1.0)] {
            let p = LiftPoint::new(x, y);
            assert!(g.apply(g.apply_inverse(p)).dist(p) < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = GridMap::from_fn(64, 33, smooth);
        let p = LiftPoint::new(0.4321, 0.5432);
        let fd = crate::prim::fd_jacobian(|z| g.apply(z), p, 1e-6);
        assert!(mat::max_abs(&mat::sub(&g.jacobian(p), &fd)) < 1e-6);
    }
}
