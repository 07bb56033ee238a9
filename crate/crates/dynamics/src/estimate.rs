use annulus_core::LiftPoint;
use mapkit::AnnulusMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Fractional part of the mean drift, in `[0, 1)`.
    pub value: f64,
    /// Mean drift of the chosen lift, not reduced.
    pub lift_value: f64,
    pub iterates: u64,
    pub samples: usize,
    /// Spread of the per-sample averages plus `1/N`.
    pub error_bound: f64,
    pub per_sample: Vec<f64>,
}

impl RotationEstimate {
    /// `‖ρ̂‖_{ℝ/ℤ}`.
    pub fn circle_norm(&self) -> f64 {
        annulus_core::circle_norm(self.value)
    }
}

/// Start points on both boundary circles and in the interior.
pub fn default_samples(count: usize) -> Vec<LiftPoint> {
    const Y: [f64; 8] = [0.0, 1.0, 0.5, 0.25, 0.75, 0.125, 0.875, 0.375];
    (0..count)
        .map(|i| {
            let x = (i as f64 * 0.381_966_011_250_105_1).fract();
            LiftPoint::new(x, Y[i % Y.len()])
        })
        .collect()
}

/// Mean of `(p₁(F^N x) − p₁(x))/N` over `samples` start points, for the lift carried by `f`.
///
/// Per-step displacements are summed with the base point brought back to
/// `[0, 1)` after every step, which keeps the evaluated coordinates bounded.
pub fn rotation_number_estimate(f: &AnnulusMap, n: u64, samples: usize) -> RotationEstimate {
    let n = n.max(1);
    let starts = default_samples(samples.max(1));
    let per_sample: Vec<f64> = starts
        .par_iter()
        .map(|&p0| {
            let mut p = p0;
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for _ in 0..n {
                let q = f.apply(p);
                // Compensated summation of the displacement.
                let y = (q.x - p.x) - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                p = LiftPoint::new(q.x - q.x.floor(), q.y);
            }
            sum / n as f64
        })
        .collect();
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let (lo, hi) = per_sample.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut value = mean - mean.floor();
    if value >= 1.0 {
        value = 0.0;
    }
    RotationEstimate {
        value,
        lift_value: mean,
        iterates: n,
        samples: per_sample.len(),
        error_bound: (hi - lo) + 1.0 / n as f64,
        per_sample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_rotation_exact() {
        for &a in &[0.1, 0.318309886, 0.9, 1.25] {
            let est = rotation_number_estimate(&AnnulusMap::rotation(a), 100, 8);
            assert!((est.lift_value - a).abs() < 1e-14);
            assert!((est.value - a.fract()).abs() < 1e-14);
            assert!(est.error_bound <= 1.0 / 100.0 + 1e-15);
        }
    }

    #[test]
    fn identity_zero() {
        let est = rotation_number_estimate(&AnnulusMap::identity(), 10, 8);
        assert_eq!(est.value, 0.0);
        let deck = rotation_number_estimate(&AnnulusMap::deck(2), 10, 3);
        assert_eq!(deck.lift_value, 2.0);
        assert_eq!(deck.value, 0.0);
    }

    #[test]
    fn samples_cover_boundaries() {
        let s = default_samples(8);
        assert!(s.iter().any(|p| p.y == 0.0) && s.iter().any(|p| p.y == 1.0));
        assert!(s.iter().any(|p| p.y > 0.0 && p.y < 1.0));
    }
}
