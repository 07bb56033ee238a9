use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use annulus_core::{mat, LiftPoint};
use mapkit::{fd_jacobian, Primitive};
use moser::*;

fn family(a: f64, k: f64, m: f64) -> impl Fn(f64, f64) -> f64 + Sync + Copy {
    move |x, y| 1.0 + a * (TAU * k * x).cos() * (PI * m * y).cos()
}

fn grid_points(nx: usize, ny: usize) -> Vec<LiftPoint> {
    (0..ny).flat_map(|j| (0..nx).map(move |i| LiftPoint::new(i as f64 / nx as f64, j as f64 / (ny - 1) as f64))).collect()
}

fn flow(lam: impl Fn(f64, f64) -> f64, n: usize, steps: u32) -> MoserFlow {
    let rho = DensityField::from_fn(Domain::Annulus, n, n, lam);
    moser_flow(&rho, MoserOptions { steps, tolerance: None }).unwrap()
}

#[test]
fn residual_halves_under_refinement() {
    let probe = grid_points(128, 65);
    for &(a, k, m) in &[(0.3, 3.0, 2.0), (0.2, 1.0, 4.0)] {
        let lam = family(a, k, m);
        let coarse = pullback_residual(&flow(lam, 32, 8), &probe, lam).unwrap();
        let fine = pullback_residual(&flow(lam, 64, 16), &probe, lam).unwrap();
        assert!(fine * 2.0 <= coarse, "{coarse} -> {fine}");
        let finer = pullback_residual(&flow(lam, 128, 32), &probe, lam).unwrap();
        assert!(finer * 2.0 <= fine && finer < 1e-5, "{fine} -> {finer}");
    }
}

#[test]
fn jacobian_matches_difference_quotients() {
    let h = flow(family(0.3, 2.0, 1.0), 64, 32);
    for &(x, y) in &[(0.13, 0.4), (0.71, 0.05), (0.5, 0.93)] {
        let p = LiftPoint::new(x, y);
        let fd = fd_jacobian(|z| h.apply(z), p, 1e-6);
        assert!(mat::max_abs(&mat::sub(&h.jacobian(p), &fd)) < 1e-7);
    }
}

#[test]
fn boundary_circles_fixed_setwise() {
    let h = flow(family(0.3, 4.0, 3.0), 64, 32);
    for i in 0..64 {
        let x = i as f64 / 64.0 + 0.003;
        assert!(h.apply(LiftPoint::new(x, 0.0)).y.abs() < 1e-12);
        assert!((h.apply(LiftPoint::new(x, 1.0)).y - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lift_equivariant() {
    let h = flow(family(0.25, 1.0, 1.0), 32, 16).to_map();
    let p = LiftPoint::new(0.37, 0.62);
    assert!(h.apply(p.deck(3)).dist(h.apply(p).deck(3)) < 1e-12);
    assert!(h.apply_inverse(h.apply(p)).dist(p) < 1e-12);
}

#[test]
fn concatenated_correction_consistent() {
    // Correct ρ in two passes: first ρ₁, then the density left over after h₁.
    let (n, steps) = (64, 32);
    let lam = family(0.3, 2.0, 2.0);
    let lam1 = family(0.15, 2.0, 2.0);
    let h1 = flow(lam1, n, steps);
    let left = |x: f64, y: f64| {
        let (q, j) = h1.forward(LiftPoint::new(x, y));
        lam(q.x, q.y) * mat::det(&j)
    };
    let rho2 = DensityField::from_fn(Domain::Annulus, n, n, left).normalized();
    let h2 = moser_flow(&rho2, MoserOptions { steps, tolerance: None }).unwrap();
    let direct = flow(lam, n, steps);
    let probe = grid_points(96, 49);
    let composed = probe
        .iter()
        .map(|&p| {
            let (q2, j2) = h2.forward(p);
            let (q, j1) = h1.forward(q2);
            (lam(q.x, q.y) * mat::det(&mat::mul(&j1, &j2)) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let r_direct = pullback_residual(&direct, &probe, lam).unwrap();
    assert!(composed <= 2.0 * r_direct.max(1e-7) + 2.0 * h1.residual.unwrap() + 2.0 * h2.residual.unwrap(), "{composed} vs {r_direct}");
    assert!(composed < 1e-4);
}

#[test]
fn square_flux_solver_pullback() {
    let lam = |u: f64, v: f64| {
        if (0.25..=0.75).contains(&u) {
            let s = (u - 0.25) / 0.5;
            1.0 + 0.2 * (PI * s).sin().powi(6) * (PI * v).cos()
        } else {
            1.0
        }
    };
    let rho = DensityField::from_fn(Domain::Square, 129, 65, lam);
    let solver = SolverRegistry::default().get("compact_flux").unwrap();
    let field = solver.solve(&rho).unwrap();
    let h = MoserFlow::new(field, 32);
    let pts: Vec<_> = (0..200).map(|i| LiftPoint::new((i as f64 * 0.618034).fract(), (i as f64 * 0.414214).fract())).collect();
    assert!(pullback_residual(&h, &pts, lam).unwrap() < 1e-4);
    // Identity off the support.
    let p = LiftPoint::new(0.1, 0.4);
    assert!(h.apply(p).dist(p) < 1e-15);
    let spectral: Arc<dyn DivergenceSolver> = SolverRegistry::default().get("spectral_neumann").unwrap();
    assert_eq!(spectral.name(), "spectral_neumann");
    assert!(SolverRegistry::default().get("nope").is_err());
}
