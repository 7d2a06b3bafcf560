//! Scalar fitness of a configuration from Monte-Carlo averaged energy and
//! packet delivery ratio, with the QoS penalty for configurations that
//! degrade PDR too far below the RFC baseline.
//!
//! Unpenalized:
//!
//! ```text
//! F(s) = offset + w_energy * E(s) / E_rfc + w_pdr * PDR(s) / PDR_max
//! ```
//!
//! and for `PDR(s) < PDR_w`:
//!
//! ```text
//! F_p(s) = F(s) + (PDR_w - PDR(s)) * E(s) / E_rfc
//! ```
//!
//! PDR is always a fraction in `[0, 1]`. Lower fitness is better.

use serde::{Deserialize, Serialize};

use crate::numeric::exact_mean;
use crate::sim::SimOutcome;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FitnessError {
    #[error("cannot aggregate an empty list of outcomes")]
    NoOutcomes,
    #[error("reference energy must be positive, got {0}")]
    ReferenceEnergy(f64),
    #[error("reference PDR must lie in (0, 1], got {0}")]
    ReferencePdr(f64),
    #[error("non-finite fitness input (energy {energy}, pdr {pdr})")]
    NotFinite { energy: f64, pdr: f64 },
}

/// Baseline metrics of the RFC configuration on one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub energy: f64,
    pub pdr: f64,
    pub pdr_max: f64,
}

impl ReferenceValues {
    pub fn new(energy: f64, pdr: f64) -> Result<Self, FitnessError> {
        let refs = Self {
            energy,
            pdr,
            pdr_max: 1.0,
        };
        refs.check()?;
        Ok(refs)
    }

    fn check(&self) -> Result<(), FitnessError> {
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return Err(FitnessError::ReferenceEnergy(self.energy));
        }
        if !(self.pdr > 0.0 && self.pdr <= 1.0) {
            return Err(FitnessError::ReferencePdr(self.pdr));
        }
        Ok(())
    }
}

/// How the worst admitted PDR is derived from the baseline PDR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdrThreshold {
    /// `(1 - max_degradation) * PDR_rfc`: at most 15% degradation.
    #[default]
    Degradation,
    /// `max_degradation * PDR_rfc`, the formula read literally.
    LiteralFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub offset: f64,
    pub energy: f64,
    pub pdr: f64,
    pub max_degradation: f64,
    pub threshold: PdrThreshold,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self {
            offset: 0.1,
            energy: 0.9,
            pdr: -0.1,
            max_degradation: 0.15,
            threshold: PdrThreshold::Degradation,
        }
    }
}

impl FitnessWeights {
    /// Worst admitted PDR (`PDR_w`).
    pub fn pdr_floor(&self, refs: &ReferenceValues) -> f64 {
        match self.threshold {
            PdrThreshold::Degradation => (1.0 - self.max_degradation) * refs.pdr,
            PdrThreshold::LiteralFraction => self.max_degradation * refs.pdr,
        }
    }
}

/// One replication as stored in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: SimOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub mean_energy: f64,
    pub mean_pdr: f64,
    pub fitness: f64,
    pub penalized: bool,
    pub replications: Vec<ReplicationRecord>,
}

impl FitnessReport {
    /// Report for objectives that are not backed by simulation.
    pub fn from_value(fitness: f64) -> Self {
        Self {
            mean_energy: 0.0,
            mean_pdr: 0.0,
            fitness,
            penalized: false,
            replications: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.outcome.energy_joules).collect()
    }

    pub fn pdrs(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.outcome.pdr).collect()
    }
}

/// Means of per-replication energy and PDR.
pub fn aggregate(outcomes: &[SimOutcome]) -> Result<(f64, f64), FitnessError> {
    let energies: Vec<f64> = outcomes.iter().map(|o| o.energy_joules).collect();
    let pdrs: Vec<f64> = outcomes.iter().map(|o| o.pdr).collect();
    match (exact_mean(&energies), exact_mean(&pdrs)) {
        (Some(e), Some(p)) => Ok((e, p)),
        _ => Err(FitnessError::NoOutcomes),
    }
}

fn check_inputs(energy: f64, pdr: f64, refs: &ReferenceValues) -> Result<(), FitnessError> {
    refs.check()?;
    if !energy.is_finite() || !pdr.is_finite() {
        return Err(FitnessError::NotFinite { energy, pdr });
    }
    Ok(())
}

/// Unpenalized weighted fitness.
pub fn fitness(
    energy: f64,
    pdr: f64,
    refs: &ReferenceValues,
    w: &FitnessWeights,
) -> Result<f64, FitnessError> {
    check_inputs(energy, pdr, refs)?;
    Ok(w.offset + w.energy * energy / refs.energy + w.pdr * pdr / refs.pdr_max)
}

/// Fitness plus the PDR shortfall weighted by relative energy.
pub fn penalized_fitness(
    energy: f64,
    pdr: f64,
    refs: &ReferenceValues,
    w: &FitnessWeights,
) -> Result<f64, FitnessError> {
    let base = fitness(energy, pdr, refs, w)?;
    Ok(base + (w.pdr_floor(refs) - pdr) * energy / refs.energy)
}

/// Picks the plain or penalized form; the penalty applies strictly below
/// the floor. Returns `(fitness, penalized)`.
pub fn evaluate_metrics(
    energy: f64,
    pdr: f64,
    refs: &ReferenceValues,
    w: &FitnessWeights,
) -> Result<(f64, bool), FitnessError> {
    if pdr < w.pdr_floor(refs) {
        Ok((penalized_fitness(energy, pdr, refs, w)?, true))
    } else {
        Ok((fitness(energy, pdr, refs, w)?, false))
    }
}

pub fn score(
    replications: Vec<ReplicationRecord>,
    refs: &ReferenceValues,
    w: &FitnessWeights,
) -> Result<FitnessReport, FitnessError> {
    let outcomes: Vec<SimOutcome> = replications.iter().map(|r| r.outcome.clone()).collect();
    let (mean_energy, mean_pdr) = aggregate(&outcomes)?;
    let (fitness, penalized) = evaluate_metrics(mean_energy, mean_pdr, refs, w)?;
    Ok(FitnessReport {
        mean_energy,
        mean_pdr,
        fitness,
        penalized,
        replications,
    })
}
