use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{MoserError, Result};

/// Geometry of the sample grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `x` periodic with nodes `i/nx`; `y` nodes `j/(ny−1)`.
    Annulus,
    /// Both directions with nodes including the end points.
    Square,
}

/// Positive samples on a tensor grid, row-major in `y` (`values[j*nx + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(domain: Domain, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(MoserError::Malformed(format!("{nx}×{ny} grid with {} values", values.len())));
        }
        Ok(Self { domain, nx, ny, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(domain: Domain, nx: usize, ny: usize, f: F) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = node(domain, nx, ny, i, j);
                values.push(f(x, y));
            }
        }
        Self { domain, nx, ny, values }
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        node(self.domain, self.nx, self.ny, i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn dx(&self) -> f64 {
        match self.domain {
            Domain::Annulus => 1.0 / self.nx as f64,
            Domain::Square => 1.0 / (self.nx - 1) as f64,
        }
    }

    pub fn dy(&self) -> f64 {
        1.0 / (self.ny - 1) as f64
    }

    /// Quadrature mean: periodic rule in a periodic direction, trapezoid otherwise.
    pub fn mean(&self) -> f64 {
        let wx = |i: usize| match self.domain {
            Domain::Square if i == 0 || i == self.nx - 1 => 0.5,
            _ => 1.0,
        };
        let wy = |j: usize| if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        let (mut s, mut w) = (0.0, 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = wx(i) * wy(j);
                s += c * self.get(i, j);
                w += c;
            }
        }
        s / w
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn normalized(&self) -> Self {
        let m = self.mean();
        Self { values: self.values.iter().map(|v| v / m).collect(), ..self.clone() }
    }

    /// Largest first and second finite-difference derivative magnitude.
    pub fn smoothness(&self) -> f64 {
        let (dx, dy) = (self.dx(), self.dy());
        let periodic = self.domain == Domain::Annulus;
        let mut worst = 0.0f64;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.get(i, j);
                let right = if i + 1 < self.nx {
                    Some(self.get(i + 1, j))
                } else if periodic {
                    Some(self.get(0, j))
                } else {
                    None
                };
                let left = if i > 0 {
                    Some(self.get(i - 1, j))
                } else if periodic {
                    Some(self.get(self.nx - 1, j))
                } else {
                    None
                };
                if let Some(r) = right {
                    worst = worst.max(((r - c) / dx).abs());
                    if let Some(l) = left {
                        worst = worst.max(((r - 2.0 * c + l) / (dx * dx)).abs());
                    }
                }
                if j + 1 < self.ny {
                    let u = self.get(i, j + 1);
                    worst = worst.max(((u - c) / dy).abs());
                    if j > 0 {
                        worst = worst.max(((u - 2.0 * c + self.get(i, j - 1)) / (dy * dy)).abs());
                    }
                }
            }
        }
        worst
    }

    /// CSV with a `x,y,rho` header, one node per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,rho\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.node(i, j);
                let _ = writeln!(s, "{x:.17e},{y:.17e},{:.17e}", self.get(i, j));
            }
        }
        s
    }

    pub fn from_csv(domain: Domain, nx: usize, ny: usize, csv: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for (n, line) in csv.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .rsplit(',')
                .next()
                .and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| MoserError::Malformed(format!("line {}: `{line}`", n + 1)))?;
            values.push(v);
        }
        Self::new(domain, nx, ny, values)
    }
}

pub(crate) fn node(domain: Domain, nx: usize, ny: usize, i: usize, j: usize) -> (f64, f64) {
    let x = match domain {
        Domain::Annulus => i as f64 / nx as f64,
        Domain::Square => i as f64 / (nx - 1) as f64,
    };
    (x, j as f64 / (ny - 1) as f64)
}
