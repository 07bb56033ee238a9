use cf_arith::{BigInt, BigRational, RotationNumber};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bump::HamiltonianBump;
use crate::tree::{compose, AnnulusMap};
use crate::{MapError, Result};

/// One Hamiltonian bump inside a stage conjugator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub strength: f64,
}

/// Stage `k`: a conjugator built from `q_k`-periodic bumps, so it commutes with `R_{p_k/q_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AkStage {
    /// Convergent index of the stage target `p_k/q_k`.
    pub index: usize,
    pub p: u64,
    pub q: u64,
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AkSchedule {
    pub stages: Vec<AkStage>,
    /// Convergent index of the rotation in `f = h R h⁻¹`; the full rational representative when absent.
    #[serde(default)]
    pub final_index: Option<usize>,
}

impl AkSchedule {
    /// Stages at the given indices with targets read off `target`.
    pub fn for_target(target: &RotationNumber, stages: &[(usize, Vec<BumpSpec>)]) -> Result<Self> {
        let mut out = Vec::with_capacity(stages.len());
        for (k, bumps) in stages {
            let p = small(target.p(*k), *k)?;
            let q = small(target.q(*k), *k)?;
            out.push(AkStage { index: *k, p, q, bumps: bumps.clone() });
        }
        Ok(Self { stages: out, final_index: None })
    }

    /// Random admissible bumps at the given stage indices, reproducible from `seed`.
    pub fn random(target: &RotationNumber, indices: &[usize], bumps_per_stage: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stages = Vec::with_capacity(indices.len());
        for &k in indices {
            let q = small(target.q(k), k)? as f64;
            let bumps = (0..bumps_per_stage)
                .map(|_| {
                    let radius = (rng.gen_range(0.2..0.45) / q).min(rng.gen_range(0.1..0.2));
                    BumpSpec {
                        cx: rng.gen(),
                        cy: rng.gen_range(radius + 0.05..1.0 - radius - 0.05),
                        radius,
                        strength: rng.gen_range(-1.0..1.0),
                    }
                })
                .collect();
            stages.push((k, bumps));
        }
        Self::for_target(target, &stages)
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Checks that the stage targets are increasing convergents of `target`.
    pub fn validate(&self, target: &RotationNumber) -> Result<()> {
        let mut last = None;
        for s in &self.stages {
            if last.is_some_and(|l| s.index <= l) {
                return Err(MapError::ScheduleMismatch(format!("stage index {} not increasing", s.index)));
            }
            last = Some(s.index);
            let (p, q) = (small(target.p(s.index), s.index)?, small(target.q(s.index), s.index)?);
            if (p, q) != (s.p, s.q) {
                return Err(MapError::ScheduleMismatch(format!("stage {} targets {}/{} but convergent is {p}/{q}", s.index, s.p, s.q)));
            }
        }
        if let (Some(f), Some(l)) = (self.final_index, last) {
            if f < l {
                return Err(MapError::ScheduleMismatch(format!("final index {f} precedes stage {l}")));
            }
        }
        if let Some(f) = self.final_index {
            if f > target.depth() {
                return Err(MapError::ScheduleMismatch(format!("final index {f} beyond depth {}", target.depth())));
            }
        }
        Ok(())
    }
}

fn small(v: cf_arith::Result<BigInt>, k: usize) -> Result<u64> {
    let v = v.map_err(|e| MapError::ScheduleMismatch(format!("convergent {k}: {e}")))?;
    u64::try_from(&v).map_err(|_| MapError::ScheduleMismatch(format!("convergent {k} exceeds 64 bits")))
}

/// The conjugator of one stage.
pub fn stage_conjugator(stage: &AkStage) -> Result<AnnulusMap> {
    let copies = u32::try_from(stage.q).map_err(|_| MapError::ScheduleMismatch(format!("q = {} too large", stage.q)))?;
    let mut h = AnnulusMap::identity();
    for b in &stage.bumps {
        let bump = HamiltonianBump::new(b.cx, b.cy, b.radius, b.strength, copies)
            .map_err(|msg| MapError::BadParams { tag: "hamiltonian_bump".into(), msg })?;
        h = compose(&h, &AnnulusMap::from_prim(bump));
    }
    Ok(h)
}

/// Finite-stage conjugation: `h = h_1 ∘ … ∘ h_m` and `f = h R_{α_m} h⁻¹`.
pub fn ak_build(schedule: &AkSchedule, target: &RotationNumber) -> Result<(AnnulusMap, AnnulusMap)> {
    schedule.validate(target)?;
    let mut h = AnnulusMap::identity();
    for s in &schedule.stages {
        h = compose(&h, &stage_conjugator(s)?);
    }
    let alpha = final_rotation(schedule, target)?;
    let f = compose(&h, &compose(&AnnulusMap::rotation_exact(&alpha), &h.inverse()));
    Ok((h, f))
}

/// The rotation `α_m` used by [`ak_build`].
pub fn final_rotation(schedule: &AkSchedule, target: &RotationNumber) -> Result<BigRational> {
    match schedule.final_index {
        None => Ok(target.representative()),
        Some(k) => target.convergent(k).map(|c| c.value()).map_err(|e| MapError::ScheduleMismatch(e.to_string())),
    }
}
