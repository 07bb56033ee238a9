use std::fmt;
use std::sync::Arc;

use mapkit::AnnulusMap;
use rayon::prelude::*;

use crate::curve::Curve;
use crate::good::{is_q_good_with, GoodnessReport};
use crate::order::SEPARATION_TOL;
use crate::{BrouwerError, Result};

/// A winning (or best) candidate with its goodness report.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub curve: Curve,
    pub report: GoodnessReport,
}

impl Candidate {
    /// Ordered by the largest good sub-orbit length, then by separation.
    fn score(&self) -> (usize, f64) {
        (self.report.good_up_to, self.report.min_separation)
    }
}

/// Outcome of one search strategy.
#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(Candidate),
    /// The best candidate seen, if any.
    Exhausted(Option<Candidate>),
}

pub trait CurveSearch: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn search(&self, f: &AnnulusMap, q: usize, tol: f64) -> SearchOutcome;
}

fn evaluate(f: &AnnulusMap, curve: Curve, q: usize, tol: f64) -> Candidate {
    let report = is_q_good_with(f, &curve, q, tol);
    Candidate { curve, report }
}

fn better(a: Option<Candidate>, b: Candidate) -> Option<Candidate> {
    match a {
        Some(a) if a.score() >= b.score() => Some(a),
        _ => Some(b),
    }
}

/// Lines `x = i/count`, `0 ≤ i < count`; the smallest winning `i` is returned.
#[derive(Debug, Clone, Copy)]
pub struct VerticalSearch {
    pub count: usize,
    pub samples: usize,
}

impl Default for VerticalSearch {
    fn default() -> Self {
        Self { count: 64, samples: 33 }
    }
}

impl VerticalSearch {
    fn scan(&self, f: &AnnulusMap, q: usize, tol: f64) -> Vec<Candidate> {
        (0..self.count).into_par_iter().map(|i| evaluate(f, Curve::vertical(i as f64 / self.count as f64, self.samples), q, tol)).collect()
    }
}

impl CurveSearch for VerticalSearch {
    fn name(&self) -> &'static str {
        "vertical"
    }

    fn search(&self, f: &AnnulusMap, q: usize, tol: f64) -> SearchOutcome {
        let all = self.scan(f, q, tol);
        if let Some(c) = all.iter().find(|c| c.report.good) {
            return SearchOutcome::Found(c.clone());
        }
        SearchOutcome::Exhausted(all.into_iter().fold(None, better))
    }
}

/// Graphs `x = c + Σ_k a_k cos(kπy)`, improved by deterministic pattern search
/// on the minimal pairwise separation, started from the best vertical line.
#[derive(Debug, Clone, Copy)]
pub struct GraphSearch {
    pub modes: usize,
    pub samples: usize,
    pub max_evals: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for GraphSearch {
    fn default() -> Self {
        Self { modes: 4, samples: 33, max_evals: 600, initial_step: 0.04, min_step: 1e-4 }
    }
}

impl GraphSearch {
    pub fn curve(&self, params: &[f64]) -> Curve {
        Curve::graph(
            |y| params[0] + params[1..].iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * y).cos()).sum::<f64>(),
            self.samples,
        )
    }
}

impl CurveSearch for GraphSearch {
    fn name(&self) -> &'static str {
        "graph"
    }

    fn search(&self, f: &AnnulusMap, q: usize, tol: f64) -> SearchOutcome {
        let start = VerticalSearch { count: 16, samples: self.samples };
        let seeds = start.scan(f, q, tol);
        let seed = seeds.iter().enumerate().fold(0, |b, (i, c)| if c.score() > seeds[b].score() { i } else { b });
        let mut params = vec![0.0; self.modes + 1];
        params[0] = seed as f64 / 16.0;
        let mut best = evaluate(f, self.curve(&params), q, tol);
        let mut step = self.initial_step;
        let mut evals = 1;
        while !best.report.good && step >= self.min_step && evals < self.max_evals {
            let mut improved = false;
            for k in 0..params.len() {
                for sign in [1.0, -1.0] {
                    let mut trial = params.clone();
                    trial[k] += sign * step;
                    let cand = evaluate(f, self.curve(&trial), q, tol);
                    evals += 1;
                    if cand.score() > best.score() && cand.curve.is_simple(tol) {
                        params = trial;
                        best = cand;
                        improved = true;
                        break;
                    }
                }
                if best.report.good || evals >= self.max_evals {
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.report.good {
            SearchOutcome::Found(best)
        } else {
            SearchOutcome::Exhausted(Some(best))
        }
    }
}

/// Strategies tried in registration order.
#[derive(Debug, Clone)]
pub struct SearchRegistry {
    strategies: Vec<Arc<dyn CurveSearch>>,
}

impl Default for SearchRegistry {
    fn default() -> Self {
        Self { strategies: vec![Arc::new(VerticalSearch::default()), Arc::new(GraphSearch::default())] }
    }
}

impl SearchRegistry {
    pub fn empty() -> Self {
        Self { strategies: Vec::new() }
    }

    pub fn register(&mut self, s: Arc<dyn CurveSearch>) {
        self.strategies.push(s);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn CurveSearch>> {
        self.strategies.iter().find(|s| s.name() == name).cloned()
    }

    pub fn strategies(&self) -> &[Arc<dyn CurveSearch>] {
        &self.strategies
    }
}

/// A `Q`-good curve and the strategy that produced it.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub curve: Curve,
    pub report: GoodnessReport,
    pub strategy: &'static str,
}

/// Searches for a `q`-good curve: vertical lines first, then graph curves.
pub fn find_brouwer_curve(f: &AnnulusMap, q: usize) -> Result<Curve> {
    find_brouwer_curve_with(f, q, &SearchRegistry::default(), SEPARATION_TOL).map(|r| r.curve)
}

pub fn find_brouwer_curve_with(f: &AnnulusMap, q: usize, reg: &SearchRegistry, tol: f64) -> Result<SearchResult> {
    let mut best: Option<Candidate> = None;
    for s in reg.strategies() {
        match s.search(f, q, tol) {
            SearchOutcome::Found(c) => return Ok(SearchResult { curve: c.curve, report: c.report, strategy: s.name() }),
            SearchOutcome::Exhausted(Some(c)) => best = better(best, c),
            SearchOutcome::Exhausted(None) => {}
        }
    }
    Err(BrouwerError::NotFound {
        q,
        best_separation: best.as_ref().map_or(0.0, |c| c.report.min_separation),
        best: best.map(|c| Box::new(c.curve)),
    })
}
