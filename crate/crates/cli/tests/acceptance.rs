//! One pass/fail line per acceptance criterion. Exits nonzero when any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use annulus_core::{c0_distance, circle_norm, IdentityMap, LiftPoint, SampleGrid};
use brouwer::{build_admissible_chart, is_q_good, Curve, SEPARATION_TOL};
use cf_arith::{convergents, rational_to_f64, BigInt, BigRational, BigUint, GrowthRegistry, PartialQuotients, RotationNumber};
use closure::{run_closure, PipelineOptions, PipelineRun, Sampling};
use dynamics::{derivative_norm, rotation_number_estimate, theorem_a0_check};
use mapkit::{ak_build, compose, AkSchedule, AnnulusMap, HamiltonianBump};
use moser::{moser_flow, DensityField, Domain, MoserOptions};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm::{build_h_with, lift_power_exact, renorm_rho, renormalize};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `(p_k, q_k)` for `k = 0..=len` from the three-term recurrence.
fn oracle_convergents(terms: &[u64]) -> Vec<(BigInt, BigInt)> {
    let (mut p, mut q) = (vec![BigInt::one(), BigInt::zero()], vec![BigInt::zero(), BigInt::one()]);
    for (i, &a) in terms.iter().enumerate() {
        p.push(BigInt::from(a) * &p[i + 1] + &p[i]);
        q.push(BigInt::from(a) * &q[i + 1] + &q[i]);
    }
    p.into_iter().zip(q).skip(1).collect()
}

fn oracle_value(terms: &[u64]) -> BigRational {
    let (p, q) = oracle_convergents(terms).pop().unwrap();
    BigRational::new(p, q)
}

fn sequences(seed: u64, count: usize, len: usize) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..len).map(|_| rng.gen_range(1..=1_000_000u64)).collect()).collect()
}

fn criterion_1() -> Verdict {
    let seqs = sequences(1, 1000, 20);
    let start = Instant::now();
    let mut failures = 0usize;
    let mut mismatched = 0usize;
    for terms in &seqs {
        let pq = PartialQuotients::from_u64(terms).unwrap();
        let cs = convergents(&pq, pq.len()).unwrap();
        for k in 0..terms.len() {
            let det = &cs[k + 1].p * &cs[k].q - &cs[k].p * &cs[k + 1].q;
            let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            failures += usize::from(det != sign);
        }
        let oracle = oracle_convergents(terms);
        mismatched += cs.iter().zip(&oracle).filter(|(c, (p, q))| c.p != *p || c.q != *q).count();
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures == 0 && mismatched == 0 && secs < 1.0,
        format!("1000 sequences x 20 quotients in [1, 1e6]: {failures} identity failures, {mismatched} convergent mismatches, {secs:.3} s (< 1 s)"),
    )
}

fn criterion_2() -> Verdict {
    // Length 22 so that every k <= 20 has q_{k+1} and a further quotient.
    let seqs = sequences(2, 1000, 22);
    let two = int(2);
    let (mut beta_fail, mut window_fail, mut lib_mismatch, mut checked) = (0usize, 0usize, 0usize, 0usize);
    for terms in &seqs {
        let alpha = oracle_value(terms);
        let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(terms).unwrap());
        let pq = oracle_convergents(terms);
        let mut alpha_k = alpha.clone();
        for k in 0..=20 {
            let (pk, qk) = (&pq[k].0, int(pq[k].1.clone()));
            let qk1 = int(pq[k + 1].1.clone());
            let beta = (&qk * &alpha - int(pk.clone())).abs();
            if rn.beta(k).unwrap() != beta || rn.alpha(k) != alpha_k {
                lib_mismatch += 1;
            }
            if !((&qk + &qk1).recip() < beta && beta < qk1.recip()) {
                beta_fail += 1;
            }
            let (lo, hi) = (&qk / (&two * &qk1), &two * &qk / &qk1);
            let inv_a = BigRational::new(BigInt::one(), BigInt::from(terms[k]));
            if !(lo < alpha_k && alpha_k < hi && lo < inv_a && inv_a < hi) {
                window_fail += 1;
            }
            checked += 1;
            let inv = alpha_k.recip();
            alpha_k = &inv - inv.floor();
        }
    }
    verdict(
        beta_fail == 0 && window_fail == 0 && lib_mismatch == 0,
        format!(
            "{checked} (alpha, k <= 20) pairs: {beta_fail} beta-bracket failures, {window_fail} alpha_k window failures, {lib_mismatch} library/oracle mismatches"
        ),
    )
}

fn random_alpha(rng: &mut ChaCha8Rng) -> RotationNumber {
    let terms: Vec<u64> = (0..12).map(|i| if i == 0 { rng.gen_range(2..20) } else { rng.gen_range(1..30) }).collect();
    RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap())
}

fn ak_stage2(seed: u64) -> (RotationNumber, AnnulusMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rn = random_alpha(&mut rng);
    let schedule = AkSchedule::random(&rn, &[1, 2], 2, seed).unwrap();
    let (_, f) = ak_build(&schedule, &rn).unwrap();
    (rn, f)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rational_err = 0.0f64;
    for _ in 0..50 {
        let rn = random_alpha(&mut rng);
        let est = rotation_number_estimate(&AnnulusMap::rotation_exact(&rn.representative()), 10_000, 8);
        rational_err = rational_err.max(circle_norm(est.value - rational_to_f64(&rn.representative())));
    }
    let mut ak_err = 0.0f64;
    for seed in 0..10 {
        let (rn, f) = ak_stage2(100 + seed);
        let est = rotation_number_estimate(&f, 10_000, 8);
        ak_err = ak_err.max(circle_norm(est.value - rational_to_f64(&rn.representative())));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        rational_err < 1e-12 && ak_err < 1e-3 && secs < 30.0,
        format!("50 rotations: max error {rational_err:.3e} (< 1e-12); 10 AK stage-2 maps at N = 1e4: max error {ak_err:.3e} (< 1e-3); {secs:.1} s (< 30 s)"),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut rho_err, mut point_err, mut errors, mut done) = (0.0f64, 0.0f64, 0usize, 0usize);
    let probe: Vec<LiftPoint> = (0..5).flat_map(|i| (0..=4).map(move |j| LiftPoint::new(i as f64 / 5.0 + 0.03, j as f64 / 4.0))).collect();
    while done < 100 {
        let terms: Vec<u64> = (0..10).map(|_| rng.gen_range(1..40)).collect();
        let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap());
        let n: i64 = rng.gen_range(1..25);
        let (a, b): (i64, i64) = (rng.gen_range(-6..=6), rng.gen_range(-6..=6));
        // Oracle over the exact representative: {−(aα + b)/{nα}}.
        let alpha = rn.representative();
        let na = int(n) * &alpha;
        let frac = &na - na.floor();
        if frac < BigRational::new(1.into(), 1000.into()) || (a * na.floor().to_integer() + b * n).is_zero() {
            continue;
        }
        done += 1;
        let shift = rational_to_f64(&(-(int(a) * &alpha + int(b)) / &frac));
        let built = (|| {
            let f = AnnulusMap::rotation_exact(&alpha);
            let l = lift_power_exact(&f, &rn, 1, 0).ok()?;
            let chart = build_admissible_chart(l.f_n(n).ok()?.map(), &Curve::vertical(0.0, 5).lift(0)).ok()?;
            let g = renormalize(&build_h_with(&chart, &l, n, 2).ok()?, a, b).ok()?;
            let rho = renorm_rho(&rn, n, a, b).ok()?;
            Some((g, rho))
        })();
        let Some((g, rho)) = built else {
            errors += 1;
            continue;
        };
        let est = rotation_number_estimate(&g, 64, 4);
        rho_err = rho_err.max(circle_norm(est.value - rho.to_f64())).max(circle_norm(rho.to_f64() - shift));
        for &p in &probe {
            let q = g.apply(p);
            point_err = point_err.max(circle_norm(q.x - p.x - shift)).max((q.y - p.y).abs());
        }
    }
    verdict(
        errors == 0 && rho_err < 1e-9 && point_err < 1e-9,
        format!("100 (alpha, n, a, b) tuples: {errors} errors, estimator vs rho formula {rho_err:.3e}, pointwise vs affine oracle {point_err:.3e} (< 1e-9)"),
    )
}

fn synthesized(a_next: Option<u64>) -> RotationNumber {
    let p = GrowthRegistry::default().parse("linear:9").unwrap();
    let prefix = PartialQuotients::from_u64(&[1, 1]).unwrap();
    let rn = cf_arith::synthesize_alpha(p.as_ref(), 3, Some(&prefix), 4).unwrap();
    match a_next {
        Some(a) => rn.with_quotient(5, BigUint::from(a)).unwrap(),
        None => rn,
    }
}

struct FullRun {
    run: Result<PipelineRun, String>,
    points: Vec<LiftPoint>,
    secs: f64,
    q: usize,
}

fn full_run() -> FullRun {
    let alpha = synthesized(None);
    let q = u64::try_from(&alpha.q(4).unwrap()).unwrap() as usize;
    let opts = PipelineOptions::default();
    let points = opts.sampling.points();
    let start = Instant::now();
    let f = AnnulusMap::rotation_exact(&alpha.representative());
    let run = run_closure(&f, &Curve::vertical(0.0, 17), &alpha, 3, &opts).map_err(|e| e.to_string());
    FullRun { run, points, secs: start.elapsed().as_secs_f64(), q }
}

fn sup(points: &[LiftPoint], d: impl Fn(LiftPoint) -> f64) -> f64 {
    points.iter().map(|&p| d(p)).fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn criterion_5(fr: &FullRun) -> Verdict {
    let run = match &fr.run {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("pipeline failed: {e}")),
    };
    let g = &run.closure.g;
    let direct = sup(&fr.points, |p| {
        let mut x = p;
        for _ in 0..fr.q {
            x = g.apply(x);
        }
        x.annulus_dist(p)
    });
    let reported = run.closure.periodicity.sup;
    verdict(
        fr.q <= 200 && direct < 1e-6 && reported < 1e-6 && fr.secs < 300.0,
        format!(
            "q_{{n+1}} = {} (<= 200), 256x33 grid + 1000 random points: sup d(g^q x, x) = {direct:.3e} direct, {reported:.3e} reported (< 1e-6); {:.1} s (< 300 s)",
            fr.q, fr.secs
        ),
    )
}

fn criterion_6(fr: &FullRun) -> Verdict {
    let run = match &fr.run {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("pipeline failed: {e}")),
    };
    let (h, s, g) = (&run.conjugacy.h, &run.conjugacy.s, &run.closure.g);
    let direct = sup(&fr.points, |p| h.apply(g.apply(p)).annulus_dist(s.apply(h.apply(p))));
    let alpha = &run.alpha;
    // s^{−q_n} = R_{1/q_{n+1}} rests on p_{n+1} q_n − p_n q_{n+1} = (−1)^n, n = 3.
    let det = alpha.p(4).unwrap() * alpha.q(3).unwrap() - alpha.p(3).unwrap() * alpha.q(4).unwrap();
    let matching = run.conjugacy.matching;
    verdict(
        direct < 1e-6 && run.conjugacy.conjugacy.sup < 1e-6 && matching < 1e-6 && det == BigInt::from(-1),
        format!(
            "sup d(h g x, s h x) = {direct:.3e} direct, {:.3e} reported (< 1e-6); matching residual {matching:.3e} (< 1e-6); p_4 q_3 - p_3 q_4 = {det}",
            run.conjugacy.conjugacy.sup
        ),
    )
}

fn criterion_7() -> Verdict {
    let opts = PipelineOptions { sampling: Sampling { grid: SampleGrid::new(64, 9), random: 50, seed: 7 }, ..PipelineOptions::default() };
    let grid = SampleGrid::new(48, 7).points();
    let mut dists = Vec::new();
    let mut exact_ok = true;
    for a in [100u64, 10_000, 1_000_000] {
        let alpha = synthesized(Some(a));
        let terms: Vec<u64> = alpha.quotients().terms().iter().map(|t| u64::try_from(t).unwrap()).collect();
        let x = oracle_value(&terms);
        let pq = oracle_convergents(&terms);
        let (p1, q1, q2) = (int(pq[4].0.clone()), int(pq[4].1.clone()), int(pq[5].1.clone()));
        let gap = (&x - &p1 / &q1).abs();
        let beta = (&q1 * &x - &p1).abs();
        exact_ok &= gap == &beta / &q1 && gap <= (&q1 * &q2).recip();
        let f = AnnulusMap::rotation_exact(&alpha.representative());
        let run = match run_closure(&f, &Curve::vertical(0.0, 9), &alpha, 3, &opts) {
            Ok(r) => r,
            Err(e) => return verdict(false, format!("a_5 = {a}: pipeline failed: {e}")),
        };
        exact_ok &= run.approximant.gap == gap && run.approximant.gap_identity_holds();
        // Direct: H R_α H⁻¹ against H s H⁻¹ with H = h⁻¹.
        let conj = run.conjugacy.approximant_conjugator();
        let inv = conj.inverse();
        let r_alpha = AnnulusMap::rotation_exact(&alpha.representative());
        let d = sup(&grid, |w| {
            let z = inv.apply(w);
            conj.apply(r_alpha.apply(z)).annulus_dist(conj.apply(run.conjugacy.s.apply(z)))
        });
        dists.push((a, d, run.approximant.c0_to_periodic.sup));
    }
    let monotone = dists.windows(2).all(|w| w[1].1 < w[0].1 && w[1].2 < w[0].2);
    let shown: Vec<String> = dists.iter().map(|(a, d, r)| format!("a_5={a}: {d:.3e} ({r:.3e} reported)")).collect();
    verdict(exact_ok && monotone, format!("gap identity and bound exact: {exact_ok}; c0(h^-1 R h, h^-1 s h): {}", shown.join(", ")))
}

fn criterion_8() -> Verdict {
    let cases = [(0.3, 1.0, 1.0), (0.3, 4.0, 1.0), (0.3, 1.0, 4.0), (0.3, 4.0, 4.0), (0.2, 3.0, 2.0), (0.1, 2.0, 3.0)];
    let probe: Vec<LiftPoint> = (0..256).flat_map(|j| (0..256).map(move |i| LiftPoint::new(i as f64 / 256.0, j as f64 / 255.0))).collect();
    let mut pass = true;
    let mut shown = Vec::new();
    for (a, k, m) in cases {
        let lam = move |x: f64, y: f64| 1.0 + a * (TAU * k * x).cos() * (PI * m * y).cos();
        let start = Instant::now();
        let residual = |n: usize, steps: u32| -> f64 {
            let rho = DensityField::from_fn(Domain::Annulus, n, n, lam);
            let Ok(flow) = moser_flow(&rho, MoserOptions { steps, tolerance: None }) else { return f64::NAN };
            // |λ(h₂ x) det Dh₂(x) − 1| from the flow map and its Jacobian.
            sup(&probe, |x| {
                let (y, d) = flow.forward(x);
                (lam(y.x, y.y) * (d[0][0] * d[1][1] - d[0][1] * d[1][0]) - 1.0).abs()
            })
        };
        let (coarse, fine) = (residual(128, 32), residual(256, 64));
        let secs = start.elapsed().as_secs_f64();
        let ok = fine < 1e-5 && coarse >= 2.0 * fine && secs < 60.0;
        pass &= ok;
        shown.push(format!("(a={a},k={k},m={m}) {coarse:.2e}->{fine:.2e} {secs:.1}s"));
    }
    verdict(pass, format!("residual at 256^2 < 1e-5, >= 2x below 128^2, < 60 s each: {}", shown.join("; ")))
}

fn criterion_9() -> Verdict {
    let grid = SampleGrid::new(128, 17);
    let mut suite: Vec<(String, AnnulusMap)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..10 {
        let rn = random_alpha(&mut rng);
        suite.push((format!("rotation {i}"), AnnulusMap::rotation_exact(&rn.representative())));
    }
    for seed in 0..10 {
        suite.push((format!("ak stage-2 {seed}"), ak_stage2(100 + seed).1));
    }
    let alpha = synthesized(None);
    suite.push(("synthesized rotation".into(), AnnulusMap::rotation_exact(&alpha.representative())));
    let h = AnnulusMap::from_prim(HamiltonianBump::new(0.5, 0.5, 0.3, 0.01, 1).unwrap());
    suite.push((
        "bump-conjugated rotation".into(),
        compose(&h, &compose(&AnnulusMap::rotation_exact(&alpha.representative()), &h.inverse())),
    ));
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    for (name, f) in &suite {
        let est = rotation_number_estimate(f, 2000, 8);
        let d = c0_distance(f, &IdentityMap, grid).sup;
        let k = derivative_norm(f, grid).sup.max(1.0);
        let bound = (1.0 + 2.0 * k) * est.circle_norm().sqrt();
        let rec = theorem_a0_check(f, &est, grid);
        if !(d < bound) || !rec.pass || (rec.bound - bound).abs() > 1e-12 * bound {
            violations.push(name.clone());
        }
        worst_ratio = worst_ratio.max(d / bound);
    }
    verdict(
        violations.is_empty(),
        format!("{} candidates, {} violations {:?}; largest d/A0 = {worst_ratio:.3}", suite.len(), violations.len(), violations),
    )
}

/// Sorted exact gaps of `{jα mod 1 : j < q}` on the circle.
fn exact_gaps(alpha: &BigRational, q: usize) -> Vec<BigRational> {
    let mut pts: Vec<BigRational> = (0..q)
        .map(|j| {
            let x = alpha * int(j as u64);
            &x - x.floor()
        })
        .collect();
    pts.sort();
    let mut gaps: Vec<BigRational> = pts.windows(2).map(|w| &w[1] - &w[0]).collect();
    gaps.push(&pts[0] + int(1) - &pts[q - 1]);
    gaps
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut disagree, mut three_gap, mut sep_err) = (0usize, 0usize, 0.0f64);
    for _ in 0..200 {
        let len = rng.gen_range(1..8);
        let terms: Vec<u64> =
            (0..len).map(|_| if rng.gen_bool(0.2) { rng.gen_range(1..100_000_000) } else { rng.gen_range(1..12) }).collect();
        let alpha = oracle_value(&terms);
        let q = rng.gen_range(2..200);
        let mut gaps = exact_gaps(&alpha, q);
        let min = rational_to_f64(gaps.iter().min().unwrap());
        gaps.sort();
        gaps.dedup();
        three_gap += usize::from(gaps.len() > 3);
        let r = is_q_good(&AnnulusMap::rotation(rational_to_f64(&alpha)), &Curve::vertical(0.0, 5), q);
        disagree += usize::from(r.good != (min >= SEPARATION_TOL));
        sep_err = sep_err.max((r.min_separation - min).abs());
    }
    verdict(
        disagree == 0 && three_gap == 0 && sep_err < 1e-12,
        format!("200 (alpha, Q) cases: {disagree} verdict disagreements, {three_gap} orbits with > 3 gap lengths, separation error {sep_err:.3e}"),
    )
}

fn main() -> ExitCode {
    let fr = full_run();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("continued-fraction identity", Box::new(criterion_1)),
        ("continued-fraction bounds", Box::new(criterion_2)),
        ("rotation-number estimator", Box::new(criterion_3)),
        ("renormalization formula", Box::new(criterion_4)),
        ("pipeline periodicity", Box::new(|| criterion_5(&fr))),
        ("conjugacy and matching", Box::new(|| criterion_6(&fr))),
        ("approximant gap", Box::new(criterion_7)),
        ("Moser correction", Box::new(criterion_8)),
        ("A0 displacement bound", Box::new(criterion_9)),
        ("q-goodness oracle", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!("criterion {:>2} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
