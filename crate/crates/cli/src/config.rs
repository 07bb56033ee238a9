use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use annulus_core::SampleGrid;
use brouwer::ChartOptions;
use cf_arith::{BigUint, Growth, GrowthRegistry, PartialQuotients, RotationNumber};
use closure::{AreaOptions, PipelineOptions, Sampling, Tolerances};
use dynamics::BoundFunctions;
use mapkit::AkSchedule;
use moser::MoserOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A partial quotient, written either as a JSON integer or as a decimal string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quotient {
    Small(u64),
    Big(String),
}

impl Quotient {
    pub fn value(&self) -> Result<BigUint, CliError> {
        match self {
            Quotient::Small(v) => Ok(BigUint::from(*v)),
            Quotient::Big(s) => s.trim().parse().map_err(|_| CliError::Config(format!("partial quotient {s:?} is not a decimal integer"))),
        }
    }
}

fn quotients(list: &[Quotient]) -> Result<Vec<BigUint>, CliError> {
    list.iter().map(Quotient::value).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Growth function, e.g. `"linear:9"` or `"zero"`.
    pub growth: String,
    /// Target window index; the pipeline index `n` when absent.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub prefix: Vec<Quotient>,
    #[serde(default = "default_tail")]
    pub tail: usize,
    /// Quotients replaced after synthesis, keyed by index.
    #[serde(default)]
    pub overrides: BTreeMap<usize, Quotient>,
}

fn default_tail() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    Quotients(Vec<Quotient>),
    Synthesize(SynthSpec),
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::Synthesize(SynthSpec {
            growth: "linear:9".into(),
            n: None,
            prefix: vec![Quotient::Small(1), Quotient::Small(1)],
            tail: default_tail(),
            overrides: BTreeMap::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `f = R_α`.
    #[default]
    Rotation,
    /// `f = h R_α h⁻¹` for an explicit schedule.
    Ak { schedule: AkSchedule },
    /// `f = h R_α h⁻¹` with seeded random bumps at the given stage indices.
    AkRandom {
        indices: Vec<usize>,
        #[serde(default = "one")]
        bumps_per_stage: usize,
        /// Multiplies every bump strength.
        #[serde(default = "unit")]
        scale: f64,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Vertical {
        #[serde(default)]
        x: f64,
        #[serde(default = "default_curve_samples")]
        samples: usize,
    },
    /// The vertical line pushed through the map's conjugator.
    Conjugated {
        #[serde(default)]
        x: f64,
        #[serde(default = "default_curve_samples")]
        samples: usize,
    },
    Search,
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec::Vertical { x: 0.0, samples: default_curve_samples() }
    }
}

fn default_curve_samples() -> usize {
    17
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub grid: SampleGrid,
    pub random: usize,
    pub approximant_grid: SampleGrid,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let s = Sampling::default();
        Self { grid: s.grid, random: s.random, approximant_grid: SampleGrid::new(64, 9) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    pub density_nodes: usize,
    pub moser_steps: u32,
    pub check_nodes: usize,
}

impl Default for ChartConfig {
    fn default() -> Self {
        let c = ChartOptions::default();
        Self { density_nodes: c.density_nodes, moser_steps: c.moser_steps, check_nodes: c.check_nodes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub enabled: bool,
    pub nx: usize,
    pub ny: usize,
    pub steps: u32,
    pub check: SampleGrid,
}

impl Default for AreaConfig {
    fn default() -> Self {
        let a = AreaOptions::default();
        Self { enabled: true, nx: a.nx, ny: a.ny, steps: a.moser.steps, check: a.check }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// Interpolation constants `c_r`; unspecified by the theory, 1 by default.
    pub c_r: BTreeMap<usize, f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { c_r: BoundFunctions::default().c_r }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub sequences: usize,
    pub rotations: usize,
    pub ak_maps: usize,
    pub renorm_cases: usize,
    pub goodness_cases: usize,
    /// `(a, k, m)` in `λ = 1 + a cos(2πkx) cos(πmy)`.
    pub moser_family: Vec<(f64, f64, f64)>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            sequences: 200,
            rotations: 20,
            ak_maps: 4,
            renorm_cases: 20,
            goodness_cases: 50,
            moser_family: vec![(0.3, 3.0, 2.0), (0.2, 1.0, 4.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: AlphaSpec,
    /// Pipeline index, odd.
    pub n: usize,
    pub map: MapSpec,
    pub curve: CurveSpec,
    pub sampling: SamplingConfig,
    pub tolerances: Tolerances,
    pub chart: ChartConfig,
    pub r: usize,
    pub area: AreaConfig,
    /// Largest admissible `q_{n+1}`.
    pub q_cap: u64,
    pub bounds: BoundsConfig,
    pub verify: VerifyConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: AlphaSpec::default(),
            n: 3,
            map: MapSpec::default(),
            curve: CurveSpec::default(),
            sampling: SamplingConfig::default(),
            tolerances: Tolerances::default(),
            chart: ChartConfig::default(),
            r: 1,
            area: AreaConfig::default(),
            q_cap: 512,
            bounds: BoundsConfig::default(),
            verify: VerifyConfig::default(),
            seed: 0,
            out: None,
        }
    }
}

/// Command-line settings applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The file at `path`, or the defaults; overrides applied and validated.
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(o)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(s) = o.tolerance_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(CliError::Config(format!("tolerance scale {s} must be positive")));
            }
            self.tolerances = self.tolerances.scaled(s);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n % 2 == 0 {
            return Err(CliError::Config(format!("pipeline index n = {} must be odd", self.n)));
        }
        self.tolerances.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.r == 0 {
            return Err(CliError::Config("regularity r must be at least 1".into()));
        }
        if self.q_cap == 0 {
            return Err(CliError::Config("q_cap must be positive".into()));
        }
        for (r, c) in &self.bounds.c_r {
            if *r == 0 || !(c.is_finite() && *c > 0.0) {
                return Err(CliError::Config(format!("c_{r} = {c}: constants need r >= 1 and a positive value")));
            }
        }
        let grids = [
            (self.sampling.grid, "sampling.grid"),
            (self.sampling.approximant_grid, "sampling.approximant_grid"),
            (self.area.check, "area.check"),
        ];
        for (g, name) in grids {
            if g.nx == 0 || g.ny < 2 {
                return Err(CliError::Config(format!("{name} must have nx >= 1 and ny >= 2")));
            }
        }
        if self.area.nx < 4 || self.area.ny < 3 {
            return Err(CliError::Config("area density needs nx >= 4 and ny >= 3".into()));
        }
        match &self.curve {
            CurveSpec::Vertical { x, samples } | CurveSpec::Conjugated { x, samples } if !x.is_finite() || *samples < 2 => {
                return Err(CliError::Config("curve needs a finite x and at least two samples".into()));
            }
            _ => {}
        }
        if let MapSpec::AkRandom { scale, .. } = &self.map {
            if !scale.is_finite() {
                return Err(CliError::Config("ak_random scale must be finite".into()));
            }
        }
        Ok(())
    }

    /// `α` and, when synthesized, its growth function.
    pub fn alpha(&self) -> Result<(RotationNumber, Option<Box<dyn Growth>>), CliError> {
        match &self.alpha {
            AlphaSpec::Quotients(q) => {
                let pq = PartialQuotients::new(quotients(q)?)?;
                Ok((RotationNumber::from_quotients(pq), None))
            }
            AlphaSpec::Synthesize(s) => {
                let p = GrowthRegistry::default().parse(&s.growth)?;
                let prefix = PartialQuotients::new(quotients(&s.prefix)?)?;
                let mut rn = cf_arith::synthesize_alpha(p.as_ref(), s.n.unwrap_or(self.n), Some(&prefix), s.tail)?;
                for (k, v) in &s.overrides {
                    rn = rn.with_quotient(*k, v.value()?)?;
                }
                Ok((rn, Some(p)))
            }
        }
    }

    pub fn bound_functions(&self) -> BoundFunctions {
        let mut b = BoundFunctions::unconfigured();
        for (r, c) in &self.bounds.c_r {
            b = b.with_c(*r, *c);
        }
        b
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        let chart = ChartOptions {
            density_nodes: self.chart.density_nodes,
            moser_steps: self.chart.moser_steps,
            check_nodes: self.chart.check_nodes,
            ..ChartOptions::default()
        };
        let area = self.area.enabled.then(|| AreaOptions {
            nx: self.area.nx,
            ny: self.area.ny,
            moser: MoserOptions { steps: self.area.steps, ..MoserOptions::default() },
            check: self.area.check,
        });
        PipelineOptions {
            tolerances: self.tolerances,
            sampling: Sampling { grid: self.sampling.grid, random: self.sampling.random, seed: self.seed },
            chart,
            r: self.r,
            approximant_grid: self.sampling.approximant_grid,
            sigma_smallness: false,
            area,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
