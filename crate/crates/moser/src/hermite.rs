use crate::density::Domain;

/// Bicubic Hermite interpolant from node values and `∂x, ∂y, ∂xy` data.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteField {
    domain: Domain,
    nx: usize,
    ny: usize,
    f: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
}

/// Corner indices and basis weights of one evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    idx: [usize; 4],
    w: [[f64; 4]; 4],
    wx: [[f64; 4]; 4],
    wy: [[f64; 4]; 4],
}

#[inline]
fn basis(s: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let s2 = s * s;
    let s3 = s2 * s;
    // Value and derivative weights for the end values (h) and end slopes (g).
    let h = [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2];
    let g = [s3 - 2.0 * s2 + s, s3 - s2];
    let dh = [6.0 * s2 - 6.0 * s, -6.0 * s2 + 6.0 * s];
    let dg = [3.0 * s2 - 4.0 * s + 1.0, 3.0 * s2 - 2.0 * s];
    (h, g, dh, dg)
}

impl HermiteField {
    pub fn new(domain: Domain, nx: usize, ny: usize, f: Vec<f64>, fx: Vec<f64>, fy: Vec<f64>, fxy: Vec<f64>) -> Self {
        assert!(f.len() == nx * ny && fx.len() == f.len() && fy.len() == f.len() && fxy.len() == f.len());
        Self { domain, nx, ny, f, fx, fy, fxy }
    }

    fn locate_x(&self, x: f64) -> (usize, usize, f64, f64) {
        match self.domain {
            Domain::Annulus => {
                let dx = 1.0 / self.nx as f64;
                let t = x.rem_euclid(1.0) * self.nx as f64;
                let i = (t.floor() as usize).min(self.nx - 1);
                (i, (i + 1) % self.nx, t - i as f64, dx)
            }
            Domain::Square => {
                let dx = 1.0 / (self.nx - 1) as f64;
                let t = x.clamp(0.0, 1.0) * (self.nx - 1) as f64;
                let i = (t.floor() as usize).min(self.nx - 2);
                (i, i + 1, t - i as f64, dx)
            }
        }
    }

    /// Cell and basis weights at `(x, y)`; `y` is clamped to `[0, 1]`.
    pub fn locate(&self, x: f64, y: f64) -> Cell {
        let (i0, i1, s, dx) = self.locate_x(x);
        let dy = 1.0 / (self.ny - 1) as f64;
        let t = y.clamp(0.0, 1.0) * (self.ny - 1) as f64;
        let j0 = (t.floor() as usize).min(self.ny - 2);
        let t = t - j0 as f64;
        let (hx, gx, dhx, dgx) = basis(s);
        let (hy, gy, dhy, dgy) = basis(t);
        let mut idx = [0; 4];
        let mut w = [[0.0; 4]; 4];
        let mut wx = [[0.0; 4]; 4];
        let mut wy = [[0.0; 4]; 4];
        for (a, &i) in [i0, i1].iter().enumerate() {
            for b in 0..2 {
                let c = 2 * a + b;
                idx[c] = (j0 + b) * self.nx + i;
                let (sx, sy) = (dx, dy);
                w[c] = [hx[a] * hy[b], gx[a] * hy[b] * sx, hx[a] * gy[b] * sy, gx[a] * gy[b] * sx * sy];
                wx[c] = [dhx[a] * hy[b] / sx, dgx[a] * hy[b], dhx[a] * gy[b] * sy / sx, dgx[a] * gy[b] * sy];
                wy[c] = [hx[a] * dhy[b] / sy, gx[a] * dhy[b] * sx / sy, hx[a] * dgy[b], gx[a] * dgy[b] * sx];
            }
        }
        Cell { idx, w, wx, wy }
    }

    /// Value and gradient at a located cell of a field on the same grid.
    #[inline]
    pub fn eval_at(&self, c: &Cell) -> (f64, [f64; 2]) {
        let (mut v, mut vx, mut vy) = (0.0, 0.0, 0.0);
        for n in 0..4 {
            let k = c.idx[n];
            let d = [self.f[k], self.fx[k], self.fy[k], self.fxy[k]];
            for m in 0..4 {
                v += c.w[n][m] * d[m];
                vx += c.wx[n][m] * d[m];
                vy += c.wy[n][m] * d[m];
            }
        }
        (v, [vx, vy])
    }

    /// Value and gradient at `(x, y)`; `y` is clamped to `[0, 1]`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        self.eval_at(&self.locate(x, y))
    }
}
