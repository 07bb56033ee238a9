use std::fmt::Write as _;

use annulus_core::{LiftPoint, SampleGrid};
use brouwer::{find_brouwer_curve_with, Curve, LiftedCurve, SearchRegistry};
use cf_arith::{rational_to_f64, RotationNumber};
use closure::{run_closure, PipelineRun, TilingData};
use dynamics::{rotation_number_estimate, theorem_a0_check, CheckRecord};
use mapkit::{ak_build, final_rotation, AkSchedule, AnnulusMap};
use serde_json::{json, Value};

use crate::config::{CurveSpec, MapSpec, RunConfig};
use crate::output::{fmt_f64, OutDir};
use crate::render::{render_svg, Polyline, Scene, TileGrid};
use crate::synth::{alpha_json, convergent_table};
use crate::{CliError, Outcome};

/// Cells per side of the tile-colour raster in the scene.
const TILE_RASTER: (usize, usize) = (160, 40);
const ESTIMATE_ITERATES: u64 = 10_000;

/// The candidate `f`, the conjugator it was built with, and the rotation number the pipeline uses.
pub struct Candidate {
    pub f: AnnulusMap,
    pub h: AnnulusMap,
    pub alpha: RotationNumber,
    pub description: Value,
}

pub fn build_candidate(cfg: &RunConfig, target: &RotationNumber) -> Result<Candidate, CliError> {
    let from_schedule = |schedule: AkSchedule, kind: &str| -> Result<Candidate, CliError> {
        let (h, f) = ak_build(&schedule, target)?;
        let rot = final_rotation(&schedule, target)?;
        let alpha = if schedule.final_index.is_some() { RotationNumber::from_rational(&rot)? } else { target.clone() };
        let description = json!({ "kind": kind, "schedule": schedule, "rotation": rot.to_string() });
        Ok(Candidate { f, h, alpha, description })
    };
    match &cfg.map {
        MapSpec::Rotation => Ok(Candidate {
            f: AnnulusMap::rotation_exact(&target.representative()),
            h: AnnulusMap::identity(),
            alpha: target.clone(),
            description: json!({ "kind": "rotation", "rotation": target.representative().to_string() }),
        }),
        MapSpec::Ak { schedule } => from_schedule(schedule.clone(), "ak"),
        MapSpec::AkRandom { indices, bumps_per_stage, scale } => {
            let mut schedule = AkSchedule::random(target, indices, *bumps_per_stage, cfg.seed)?;
            for b in schedule.stages.iter_mut().flat_map(|s| s.bumps.iter_mut()) {
                b.strength *= scale;
            }
            from_schedule(schedule, "ak_random")
        }
    }
}

fn build_curve(cfg: &RunConfig, c: &Candidate, q: usize) -> Result<(Curve, Value), CliError> {
    Ok(match &cfg.curve {
        CurveSpec::Vertical { x, samples } => (Curve::vertical(*x, *samples), json!({ "kind": "vertical", "x": x, "samples": samples })),
        CurveSpec::Conjugated { x, samples } => {
            (Curve::vertical(*x, *samples).image(&c.h), json!({ "kind": "conjugated", "x": x, "samples": samples }))
        }
        CurveSpec::Search => {
            let r = find_brouwer_curve_with(&c.f, q, &SearchRegistry::default(), cfg.tolerances.curve)?;
            let desc = json!({ "kind": "search", "strategy": r.strategy, "samples": r.curve.len(), "goodness": r.report.to_json() });
            (r.curve, desc)
        }
    })
}

fn lifted_points(c: &LiftedCurve) -> impl Iterator<Item = (f64, f64)> + '_ {
    c.samples().iter().map(|p| (p.x, p.y))
}

/// Curves of `Γ`, `γ`, `γ*` and the tile raster.
pub fn tiling_scene(data: &TilingData) -> Scene {
    let curves = data.curves().iter().enumerate().map(|(j, c)| Polyline::from_samples("curve", Some(j), lifted_points(c))).collect();
    let overlays = vec![
        Polyline::from_samples("gamma", None, lifted_points(data.gamma_lift())),
        Polyline::from_samples("gamma_star", None, lifted_points(data.gamma_star())),
    ];
    let (nx, ny) = TILE_RASTER;
    let tiles = (0..ny)
        .flat_map(|r| (0..nx).map(move |i| LiftPoint::new((i as f64 + 0.5) / nx as f64, (r as f64 + 0.5) / ny as f64)))
        .map(|p| data.locate(p).ok().map(|l| l.tile))
        .collect();
    Scene { q: data.q(), curves, overlays, tiles: Some(TileGrid { nx, ny, tiles }) }
}

fn curves_csv(data: &TilingData) -> String {
    let mut s = String::from("j,i,x,y\n");
    for (j, c) in data.curves().iter().enumerate() {
        for (i, p) in c.samples().iter().enumerate() {
            let _ = writeln!(s, "{j},{i},{},{}", fmt_f64(p.x), fmt_f64(p.y));
        }
    }
    s
}

fn lifted_csv(c: &LiftedCurve) -> String {
    let n = c.len();
    let mut s = String::from("t,x,y\n");
    for (i, p) in c.samples().iter().enumerate() {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let _ = writeln!(s, "{},{},{}", fmt_f64(t), fmt_f64(p.x), fmt_f64(p.y));
    }
    s
}

/// The staged checks of a completed run; all must pass.
pub fn run_checks(run: &PipelineRun, cfg: &RunConfig) -> Vec<CheckRecord> {
    let tol = &cfg.tolerances;
    let none = json!({});
    let mut out = vec![
        CheckRecord::below("chart_jacobian", none.clone(), run.chart.diagnostics().jacobian_deviation, tol.chart),
        CheckRecord::below("periodicity", json!({ "q": run.closure.q() }), run.closure.periodicity.sup, tol.periodicity),
        CheckRecord::below("gluing", none.clone(), run.closure.gluing, tol.periodicity),
        CheckRecord::below("conjugacy", none.clone(), run.conjugacy.conjugacy.sup, tol.conjugacy),
        CheckRecord::below("matching", none.clone(), run.conjugacy.matching, tol.conjugacy),
    ];
    let rep = &run.approximant;
    out.push(CheckRecord {
        name: "gap_identity".into(),
        inputs: json!({ "gap": rep.gap.to_string(), "formula": rep.gap_formula.to_string() }),
        measured: rational_to_f64(&rep.gap),
        bound: rep.gap_bound.as_ref().map_or(f64::INFINITY, rational_to_f64),
        pass: rep.gap_identity_holds(),
    });
    if let Some((c, _)) = &run.corrected {
        out.push(CheckRecord::below("area_deviation", none, c.area_deviation.unwrap_or(f64::NAN), tol.area));
    }
    out
}

/// Everything `run-pipeline` produces, before it is written out.
pub struct PipelineReport {
    pub manifest: Value,
    pub pass: bool,
    pub run: Option<PipelineRun>,
    pub scene: Option<Scene>,
    pub candidate: Candidate,
    pub curve: Curve,
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineReport, CliError> {
    let (target, _) = cfg.alpha()?;
    let candidate = build_candidate(cfg, &target)?;
    let alpha = &candidate.alpha;
    let q_big = alpha.q(cfg.n + 1)?;
    let q =
        u64::try_from(&q_big).ok().filter(|q| *q <= cfg.q_cap).ok_or_else(|| {
            CliError::Budget(format!("q_{{n+1}} = {q_big} exceeds the cap {}; raise q_cap or choose a smaller n", cfg.q_cap))
        })? as usize;
    let (curve, curve_desc) = build_curve(cfg, &candidate, q)?;

    let grid = SampleGrid::new(128, 17);
    let est = rotation_number_estimate(&candidate.f, ESTIMATE_ITERATES, 8);
    let mut checks = vec![theorem_a0_check(&candidate.f, &est, grid)];
    let mut manifest = json!({
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "alpha": alpha_json(alpha),
        "n": cfg.n,
        "q_next": q,
        "tolerances": cfg.tolerances,
        "map": candidate.description,
        "curve": curve_desc,
        "rotation_estimate": { "value": est.value, "error_bound": est.error_bound, "iterates": est.iterates },
    });
    let (run, scene) = match run_closure(&candidate.f, &curve, alpha, cfg.n, &cfg.pipeline_options()) {
        Ok(run) => {
            checks.extend(run_checks(&run, cfg));
            manifest["results"] = run.to_json();
            let (order, rep) = match &run.corrected {
                Some((_, rep)) => (cfg.r.saturating_sub(2), rep),
                None => (cfg.r.saturating_sub(1), &run.approximant),
            };
            manifest["final_distance"] = json!({ "order": order, "diffr_to_f": rep.diffr_to_f, "c0_to_f": rep.c0_to_f.sup });
            manifest["stage_error"] = Value::Null;
            let scene = tiling_scene(&run.closure.data);
            (Some(run), Some(scene))
        }
        Err(e) => {
            manifest["stage_error"] = json!({ "stage": e.stage.to_string(), "message": e.to_string() });
            (None, None)
        }
    };
    let pass = run.is_some() && checks.iter().all(|c| c.pass);
    manifest["checks"] = serde_json::to_value(&checks).expect("checks serialize");
    manifest["pass"] = json!(pass);
    Ok(PipelineReport { manifest, pass, run, scene, candidate, curve })
}

pub fn cmd_run_pipeline(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut report = run_pipeline(cfg)?;
    let mut dir = OutDir::create(&cfg.out_dir())?;
    dir.text("convergents.csv", &convergent_table(&report.candidate.alpha, None))?;
    dir.text("gamma.csv", &report.curve.to_csv())?;
    if let Some(run) = &report.run {
        let data = &run.closure.data;
        dir.text("gamma_star.csv", &lifted_csv(data.gamma_star()))?;
        dir.text("curves.csv", &curves_csv(data))?;
        if let Some(lambda) = run.corrected.as_ref().and_then(|(c, _)| c.lambda.as_ref()) {
            dir.text("density.csv", &lambda.to_csv())?;
        }
    }
    if let Some(scene) = &report.scene {
        dir.json("scene.json", &serde_json::to_value(scene).expect("scene serializes"))?;
        dir.text("tiling.svg", &render_svg(scene))?;
    }
    let mut files = dir.names();
    files.push("manifest.json".into());
    report.manifest["files"] = json!(files);
    dir.json("manifest.json", &report.manifest)?;

    let mut summary = String::new();
    if let Some(err) = report.manifest["stage_error"].get("message").and_then(Value::as_str) {
        let _ = writeln!(summary, "FAILED: {err}");
    }
    for c in report.manifest["checks"].as_array().into_iter().flatten() {
        let _ = writeln!(
            summary,
            "{:<16} {:>24} {:>24}  {}",
            c["name"].as_str().unwrap_or(""),
            c["measured"].as_f64().map_or("-".into(), fmt_f64),
            c["bound"].as_f64().map_or("-".into(), fmt_f64),
            if c["pass"] == json!(true) { "pass" } else { "FAIL" }
        );
    }
    Ok(Outcome { pass: report.pass, files: dir.into_files(), summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlphaSpec, Quotient, SamplingConfig};

    fn small() -> RunConfig {
        RunConfig {
            sampling: SamplingConfig { grid: SampleGrid::new(32, 5), random: 10, approximant_grid: SampleGrid::new(16, 5) },
            area: crate::config::AreaConfig { enabled: false, ..Default::default() },
            ..RunConfig::default()
        }
    }

    #[test]
    fn q_cap_refuses_large_denominators() {
        let cfg = RunConfig { q_cap: 100, ..small() };
        assert!(matches!(run_pipeline(&cfg), Err(CliError::Budget(_))));
    }

    #[test]
    fn rational_rotation_passes_every_check() {
        let q = [1u64, 1, 9, 9].iter().map(|&a| Quotient::Small(a)).collect();
        let cfg = RunConfig { alpha: AlphaSpec::Quotients(q), curve: CurveSpec::Vertical { x: 0.25, samples: 5 }, ..small() };
        let rep = run_pipeline(&cfg).unwrap();
        assert!(rep.pass, "{}", rep.manifest["checks"]);
        let scene = rep.scene.unwrap();
        assert_eq!(scene.curves.len(), 173);
        // Γ of the rotation is 173 vertical lines.
        assert!(scene.curves.iter().all(|c| c.points.iter().all(|p| (p[0] - c.points[0][0]).abs() < 1e-9)));
        let tiles = scene.tiles.unwrap();
        assert!(tiles.tiles.iter().all(Option::is_some));
    }

    #[test]
    fn stage_failure_is_recorded() {
        // Orbit curves 1/q apart cannot meet a separation budget of 1/2.
        let mut cfg = small();
        cfg.tolerances.curve = 0.5;
        let rep = run_pipeline(&cfg).unwrap();
        assert!(!rep.pass && rep.run.is_none());
        assert_eq!(rep.manifest["stage_error"]["stage"], "tiling");
    }
}
