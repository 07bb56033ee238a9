use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use annulus_core::{c0_distance, circle_norm, LiftPoint, SampleGrid};
use brouwer::{build_admissible_chart, is_q_good, Curve, SEPARATION_TOL};
use cf_arith::{gauss, rational_to_f64, BigInt, BigRational, PartialQuotients, RotationNumber};
use dynamics::{rotation_number_estimate, theorem_a0_check, BoundFunctions, CheckRecord};
use mapkit::{ak_build, AkSchedule, AnnulusMap};
use moser::{moser_flow, pullback_residual, DensityField, Domain, MoserOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm::{build_h_with, lift_power_exact, renorm_rho, renormalize};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, VerifyConfig};
use crate::output::{fmt_f64, OutDir};
use crate::{CliError, Outcome};

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
}

impl Suite {
    fn new(name: &str, checks: Vec<CheckRecord>) -> Self {
        Self { name: name.into(), pass: checks.iter().all(|c| c.pass), checks }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<Suite>,
}

impl VerifyReport {
    pub fn table(&self) -> String {
        let mut s = format!("{:<10} {:<28} {:>24} {:>24}  result\n", "suite", "check", "measured", "bound");
        for suite in &self.suites {
            for c in &suite.checks {
                let _ = writeln!(
                    s,
                    "{:<10} {:<28} {:>24} {:>24}  {}",
                    suite.name,
                    c.name,
                    fmt_f64(c.measured),
                    fmt_f64(c.bound),
                    if c.pass { "pass" } else { "FAIL" }
                );
            }
        }
        let _ = writeln!(s, "overall: {}", if self.pass { "pass" } else { "FAIL" });
        s
    }
}

fn rat(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Counts an exact predicate over cases: `measured` is the number of failures.
fn tally(name: &str, inputs: serde_json::Value, failures: usize) -> CheckRecord {
    CheckRecord::below(name, inputs, failures as f64, 1.0)
}

fn random_terms(rng: &mut ChaCha8Rng, len: usize, max: u64) -> Vec<u64> {
    (0..len).map(|_| rng.gen_range(1..=max)).collect()
}

fn cf_suite(v: &VerifyConfig, rng: &mut ChaCha8Rng) -> Suite {
    let (mut det, mut beta, mut window, mut gauss_fail) = (0, 0, 0, 0);
    let two = BigRational::from_integer(2.into());
    for _ in 0..v.sequences {
        let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(&random_terms(rng, 20, 1_000_000)).unwrap());
        let cs = rn.convergents();
        for k in 0..rn.depth() {
            let d = &cs[k + 1].p * &cs[k].q - &cs[k].p * &cs[k + 1].q;
            if d != BigInt::from(if k % 2 == 0 { 1 } else { -1 }) {
                det += 1;
            }
        }
        for k in 0..rn.depth().saturating_sub(1) {
            let (qk, qk1) = (rat(&cs[k].q), rat(&cs[k + 1].q));
            let b = rn.beta(k).unwrap();
            if !((&qk + &qk1).recip() < b && b < qk1.recip()) {
                beta += 1;
            }
            let (lo, hi) = (&qk / (&two * &qk1), &two * &qk / &qk1);
            let a = rn.alpha(k);
            if !(lo < a && a < hi) {
                window += 1;
            }
            if k + 2 <= rn.depth() && !(gauss(&a) < &two * &qk1 / rat(&cs[k + 2].q)) {
                gauss_fail += 1;
            }
        }
    }
    let inputs = json!({ "sequences": v.sequences, "length": 20, "max_quotient": 1_000_000 });
    Suite::new(
        "cf",
        vec![
            tally("determinant_identity", inputs.clone(), det),
            tally("beta_bracket", inputs.clone(), beta),
            tally("alpha_window", inputs.clone(), window),
            tally("gauss_of_alpha", inputs, gauss_fail),
        ],
    )
}

fn ak_stage2(seed: u64) -> (RotationNumber, AnnulusMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = vec![rng.gen_range(2..20)];
    terms.extend((0..11).map(|_| rng.gen_range(1..30)));
    let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap());
    let schedule = AkSchedule::random(&rn, &[1, 2], 2, seed).expect("small stage denominators");
    let (_, f) = ak_build(&schedule, &rn).expect("schedule built for rn");
    (rn, f)
}

fn metric_suite(v: &VerifyConfig, rng: &mut ChaCha8Rng, seed: u64) -> Suite {
    let grid = SampleGrid::new(32, 9);
    let mut worst_rot = 0.0f64;
    for _ in 0..v.rotations {
        let (s, t): (f64, f64) = (rng.gen(), rng.gen());
        let d = c0_distance(&AnnulusMap::rotation(s), &AnnulusMap::rotation(t), grid).sup;
        worst_rot = worst_rot.max((d - circle_norm(s - t)).abs());
    }
    let maps: Vec<AnnulusMap> = (0..v.ak_maps.max(3)).map(|i| ak_stage2(seed.wrapping_add(i as u64)).1).collect();
    let (mut asym, mut triangle, mut selfd) = (0.0f64, 0.0f64, 0.0f64);
    for f in &maps {
        selfd = selfd.max(c0_distance(f, f, grid).sup);
        for g in &maps {
            asym = asym.max((c0_distance(f, g, grid).sup - c0_distance(g, f, grid).sup).abs());
            for h in &maps {
                let excess = c0_distance(f, h, grid).sup - c0_distance(f, g, grid).sup - c0_distance(g, h, grid).sup;
                triangle = triangle.max(excess);
            }
        }
    }
    let inputs = json!({ "grid": [grid.nx, grid.ny] });
    Suite::new(
        "metric",
        vec![
            CheckRecord::below("rotation_distance", inputs.clone(), worst_rot, 1e-12),
            CheckRecord::below("self_distance", inputs.clone(), selfd, 1e-15),
            CheckRecord::below("asymmetry", inputs.clone(), asym, 1e-9),
            CheckRecord::below("triangle_excess", inputs, triangle, 1e-9),
        ],
    )
}

/// `λ = 1 + a cos(2πkx) cos(πmy)`.
pub fn moser_family(a: f64, k: f64, m: f64) -> impl Fn(f64, f64) -> f64 + Sync + Copy {
    move |x, y| 1.0 + a * (TAU * k * x).cos() * (PI * m * y).cos()
}

fn grid_points(nx: usize, ny: usize) -> Vec<LiftPoint> {
    (0..ny).flat_map(|j| (0..nx).map(move |i| LiftPoint::new(i as f64 / nx as f64, j as f64 / (ny - 1) as f64))).collect()
}

fn moser_suite(v: &VerifyConfig) -> Suite {
    let probe = grid_points(128, 65);
    let mut checks = Vec::new();
    for &(a, k, m) in &v.moser_family {
        let lam = moser_family(a, k, m);
        let residual = |n: usize, steps: u32| -> f64 {
            let rho = DensityField::from_fn(Domain::Annulus, n, n, lam);
            moser_flow(&rho, MoserOptions { steps, tolerance: None })
                .and_then(|flow| pullback_residual(&flow, &probe, lam))
                .unwrap_or(f64::NAN)
        };
        let (coarse, fine) = (residual(64, 16), residual(128, 32));
        let inputs = json!({ "a": a, "k": k, "m": m });
        checks.push(CheckRecord::below("pullback_residual", inputs.clone(), fine, 1e-5));
        checks.push(CheckRecord::at_least("refinement_reduction", inputs, coarse / fine, 2.0));
    }
    Suite::new("moser", checks)
}

fn renorm_suite(v: &VerifyConfig, rng: &mut ChaCha8Rng) -> Suite {
    let (mut rho_err, mut point_err) = (0.0f64, 0.0f64);
    let mut done = 0;
    let mut failures = 0;
    while done < v.renorm_cases {
        let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(&random_terms(rng, 10, 40)).unwrap());
        let alpha = rn.to_f64();
        let n: i64 = rng.gen_range(1..25);
        let (a, b): (i64, i64) = (rng.gen_range(-6..=6), rng.gen_range(-6..=6));
        let m = (n as f64 * alpha).floor() as i64;
        let frac = n as f64 * alpha - m as f64;
        if a * m + b * n == 0 || frac < 1e-3 {
            continue;
        }
        let Ok(expected) = renorm_rho(&rn, n, a, b) else { continue };
        done += 1;
        let f = AnnulusMap::rotation_exact(&rn.representative());
        let g = lift_power_exact(&f, &rn, 1, 0).ok().and_then(|l| {
            let chart = build_admissible_chart(l.f_n(n).ok()?.map(), &Curve::vertical(0.0, 5).lift(0)).ok()?;
            renormalize(&build_h_with(&chart, &l, n, 2).ok()?, a, b).ok()
        });
        let Some(g) = g else {
            failures += 1;
            continue;
        };
        let est = rotation_number_estimate(&g, 64, 4);
        rho_err = rho_err.max(circle_norm(est.value - expected.to_f64()));
        let shift = -(a as f64 * alpha + b as f64) / frac;
        for p in grid_points(4, 5) {
            let q = g.apply(p);
            point_err = point_err.max((q.x - p.x - shift).abs()).max((q.y - p.y).abs());
        }
    }
    let inputs = json!({ "cases": v.renorm_cases });
    Suite::new(
        "renorm",
        vec![
            tally("construction", inputs.clone(), failures),
            CheckRecord::below("rho_formula", inputs.clone(), rho_err, 1e-9),
            CheckRecord::below("affine_pointwise", inputs, point_err, 1e-9),
        ],
    )
}

fn bounds_suite(v: &VerifyConfig, bounds: &BoundFunctions, seed: u64) -> Suite {
    let grid = SampleGrid::new(128, 17);
    let mut checks = Vec::new();
    for i in 0..v.ak_maps {
        let (_, f) = ak_stage2(seed.wrapping_add(i as u64));
        let est = rotation_number_estimate(&f, 2000, 8);
        let mut rec = theorem_a0_check(&f, &est, grid);
        let k = rec.inputs["K"].as_f64().unwrap_or(1.0);
        // A_r with the configured c_r, reported alongside.
        let ar: serde_json::Map<String, serde_json::Value> =
            bounds.c_r.keys().map(|&r| (format!("A_{r}"), json!(bounds.Ar(r, est.circle_norm(), k).ok()))).collect();
        rec.inputs["A_r"] = serde_json::Value::Object(ar);
        checks.push(rec);
    }
    Suite::new("bounds", checks)
}

/// Smallest circular gap of `{jα mod 1 : j < q}`.
fn exact_min_gap(alpha: &BigRational, q: usize) -> BigRational {
    let mut pts: Vec<BigRational> = (0..q)
        .map(|j| {
            let x = alpha * BigRational::from_integer(BigInt::from(j));
            &x - x.floor()
        })
        .collect();
    pts.sort();
    let mut best = &pts[0] + BigRational::from_integer(1.into()) - &pts[q - 1];
    for w in pts.windows(2) {
        best = best.min(&w[1] - &w[0]);
    }
    best
}

fn goodness_suite(v: &VerifyConfig, rng: &mut ChaCha8Rng) -> Suite {
    let mut wrong = 0;
    for _ in 0..v.goodness_cases {
        let len = rng.gen_range(1..8);
        let terms: Vec<u64> =
            (0..len).map(|_| if rng.gen_bool(0.2) { rng.gen_range(1..100_000_000) } else { rng.gen_range(1..12) }).collect();
        let alpha = RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap()).representative();
        let q = rng.gen_range(2..200);
        let gap = rational_to_f64(&exact_min_gap(&alpha, q));
        let r = is_q_good(&AnnulusMap::rotation(rational_to_f64(&alpha)), &Curve::vertical(0.0, 5), q);
        if r.good != (gap >= SEPARATION_TOL) {
            wrong += 1;
        }
    }
    Suite::new("goodness", vec![tally("rigid_gap_oracle", json!({ "cases": v.goodness_cases }), wrong)])
}

pub fn run_verify(cfg: &RunConfig) -> VerifyReport {
    let v = &cfg.verify;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let suites = vec![
        cf_suite(v, &mut rng),
        metric_suite(v, &mut rng, cfg.seed),
        moser_suite(v),
        renorm_suite(v, &mut rng),
        bounds_suite(v, &cfg.bound_functions(), cfg.seed),
        goodness_suite(v, &mut rng),
    ];
    VerifyReport { seed: cfg.seed, pass: suites.iter().all(|s| s.pass), suites }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = run_verify(cfg);
    let mut dir = OutDir::create(&cfg.out_dir())?;
    dir.json("verify.json", &serde_json::to_value(&report).expect("report serializes"))?;
    Ok(Outcome { pass: report.pass, files: dir.into_files(), summary: report.table() })
}
