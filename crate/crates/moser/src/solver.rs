use std::collections::BTreeMap;
use std::sync::Arc;

use annulus_core::Mat2;

use crate::density::{DensityField, Domain};
use crate::flux::CompactFluxSolver;
use crate::spectral::SpectralNeumannSolver;
use crate::{MoserError, Result};

/// A vector field `w` with `div w = ρ − 1`, together with an interpolant of `ρ`.
pub trait FlowField: Send + Sync {
    fn domain(&self) -> Domain;
    /// `w(x, y)` and `Dw(x, y)` (rows are components).
    fn field(&self, x: f64, y: f64) -> ([f64; 2], Mat2);
    /// `ρ(x, y)` and `∇ρ(x, y)`.
    fn density(&self, x: f64, y: f64) -> (f64, [f64; 2]);
    /// Both of the above at one point.
    fn field_and_density(&self, x: f64, y: f64) -> ([f64; 2], Mat2, f64, [f64; 2]) {
        let (w, dw) = self.field(x, y);
        let (r, dr) = self.density(x, y);
        (w, dw, r, dr)
    }
    /// Sup of `div w − (ρ − 1)` at the nodes.
    fn divergence_residual(&self) -> f64;
}

pub trait DivergenceSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, rho: &DensityField) -> Result<Arc<dyn FlowField>>;
}

#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn DivergenceSolver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self { solvers: BTreeMap::new() };
        r.register(Arc::new(SpectralNeumannSolver));
        r.register(Arc::new(CompactFluxSolver::default()));
        r
    }
}

impl SolverRegistry {
    pub fn register(&mut self, s: Arc<dyn DivergenceSolver>) {
        self.solvers.insert(s.name().to_string(), s);
    }

    pub fn names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DivergenceSolver>> {
        self.solvers.get(name).cloned().ok_or_else(|| MoserError::UnknownSolver(name.to_string()))
    }
}
