//! Monte-Carlo evaluation of a genome: `N` independently seeded simulator
//! replications run on a worker pool, aggregated in replication order.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{EvalContext, Objective};
use crate::fitness::{score, FitnessError, FitnessReport, FitnessWeights, ReferenceValues, ReplicationRecord};
use crate::param_space::{Genome, ParamSpace, Violation};
use crate::rng::{mix, Purpose};
use crate::sim::{simulate, AodvConfig, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid evaluation settings: {0}")]
    Config(String),
    #[error("genome violates the parameter space: {}", list(.0))]
    InvalidGenome(Vec<Violation>),
    #[error("replication {index} (seed {seed}) failed: {message}")]
    Replication {
        index: usize,
        seed: u64,
        message: String,
    },
    #[error(transparent)]
    Fitness(#[from] FitnessError),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// How replication seeds depend on where a genome is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Seeds depend on the genome only; re-evaluation repeats outcomes.
    #[default]
    GenomeHash,
    /// Seeds are also salted with generation and individual.
    Fresh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub replications: usize,
    pub parallelism: usize,
    pub base_seed: u64,
    pub noise: NoiseMode,
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            replications: 24,
            parallelism: available_cores(),
            base_seed: 0,
            noise: NoiseMode::GenomeHash,
        }
    }
}

impl EvalConfig {
    pub fn check(&self) -> Result<(), EvalError> {
        if self.replications == 0 {
            return Err(EvalError::Config("replications must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(EvalError::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seed of replication `r` of `genome`.
pub fn replication_seed(base_seed: u64, genome: &Genome, r: usize) -> u64 {
    mix(base_seed, &[Purpose::Replication as u64, genome.content_hash(), r as u64])
}

fn fresh_seed(base_seed: u64, genome: &Genome, r: usize, ctx: EvalContext) -> u64 {
    mix(
        replication_seed(base_seed, genome, r),
        &[Purpose::FreshNoise as u64, ctx.generation as u64, ctx.individual as u64],
    )
}

#[derive(Debug, Clone)]
struct Baseline {
    refs: ReferenceValues,
    replications: Vec<ReplicationRecord>,
}

pub struct MonteCarloEvaluator {
    scenario: Arc<Scenario>,
    space: ParamSpace,
    cfg: EvalConfig,
    pool: rayon::ThreadPool,
    baselines: Mutex<HashMap<(u64, u64), Baseline>>,
    replications_run: AtomicU64,
}

impl MonteCarloEvaluator {
    pub fn new(scenario: Arc<Scenario>, cfg: EvalConfig) -> Result<Self, EvalError> {
        cfg.check()?;
        let threads = cfg.parallelism.min(cfg.replications);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("mc-eval-{i}"))
            .build()
            .map_err(|e| EvalError::Config(e.to_string()))?;
        Ok(Self {
            scenario,
            space: ParamSpace::aodv(),
            cfg,
            pool,
            baselines: Mutex::new(HashMap::new()),
            replications_run: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Simulator runs performed so far, baseline included.
    pub fn replications_run(&self) -> u64 {
        self.replications_run.load(Ordering::Relaxed)
    }

    fn aodv(&self, genome: &Genome) -> Result<AodvConfig, EvalError> {
        AodvConfig::from_genome(genome, &self.space).map_err(EvalError::InvalidGenome)
    }

    fn run_one(&self, cfg: &AodvConfig, index: usize, seed: u64) -> Result<ReplicationRecord, EvalError> {
        let outcome = catch_unwind(AssertUnwindSafe(|| simulate(cfg, &self.scenario, seed)))
            .map_err(|panic| EvalError::Replication {
                index,
                seed,
                message: panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "simulator panicked".into()),
            })?;
        self.replications_run.fetch_add(1, Ordering::Relaxed);
        if !outcome.energy_joules.is_finite() || !outcome.pdr.is_finite() {
            return Err(EvalError::Replication {
                index,
                seed,
                message: format!("non-finite outcome {outcome:?}"),
            });
        }
        Ok(ReplicationRecord { index, seed, outcome })
    }

    /// A single replication, exactly as it would run inside a batch.
    pub fn replication(&self, genome: &Genome, index: usize) -> Result<ReplicationRecord, EvalError> {
        let cfg = self.aodv(genome)?;
        self.run_one(&cfg, index, replication_seed(self.cfg.base_seed, genome, index))
    }

    /// All replications of `genome`, ordered by index. `ctx` only matters
    /// in fresh-noise mode.
    pub fn replications(
        &self,
        genome: &Genome,
        ctx: Option<EvalContext>,
    ) -> Result<Vec<ReplicationRecord>, EvalError> {
        let cfg = self.aodv(genome)?;
        let base = self.cfg.base_seed;
        let seed = |r| match (self.cfg.noise, ctx) {
            (NoiseMode::Fresh, Some(ctx)) => fresh_seed(base, genome, r, ctx),
            _ => replication_seed(base, genome, r),
        };
        let results: Vec<_> = self.pool.install(|| {
            (0..self.cfg.replications)
                .into_par_iter()
                .map(|r| self.run_one(&cfg, r, seed(r)))
                .collect()
        });
        results.into_iter().collect()
    }

    pub fn evaluate(
        &self,
        genome: &Genome,
        refs: &ReferenceValues,
        weights: &FitnessWeights,
    ) -> Result<FitnessReport, EvalError> {
        Ok(score(self.replications(genome, None)?, refs, weights)?)
    }

    pub fn evaluate_in(
        &self,
        genome: &Genome,
        ctx: EvalContext,
        refs: &ReferenceValues,
        weights: &FitnessWeights,
    ) -> Result<FitnessReport, EvalError> {
        Ok(score(self.replications(genome, Some(ctx))?, refs, weights)?)
    }

    fn baseline(&self) -> Result<Baseline, EvalError> {
        let key = (self.scenario.fingerprint(), self.cfg.base_seed);
        if let Some(b) = self.baselines.lock().expect("baseline cache").get(&key) {
            return Ok(b.clone());
        }
        let replications = self.replications(&self.space.rfc_default(), None)?;
        let outcomes: Vec<_> = replications.iter().map(|r| r.outcome.clone()).collect();
        let (energy, pdr) = crate::fitness::aggregate(&outcomes)?;
        let b = Baseline {
            refs: ReferenceValues::new(energy, pdr)?,
            replications,
        };
        self.baselines
            .lock()
            .expect("baseline cache")
            .insert(key, b.clone());
        Ok(b)
    }

    /// Mean energy and PDR of the RFC configuration on this scenario and
    /// seed. Cached.
    pub fn evaluate_baseline(&self) -> Result<ReferenceValues, EvalError> {
        Ok(self.baseline()?.refs)
    }

    /// RFC report scored against its own references.
    pub fn baseline_report(&self, weights: &FitnessWeights) -> Result<FitnessReport, EvalError> {
        let b = self.baseline()?;
        Ok(score(b.replications, &b.refs, weights)?)
    }

    /// Binds references and weights into a DE objective.
    pub fn objective(&self, refs: ReferenceValues, weights: FitnessWeights) -> ScoredObjective<'_> {
        ScoredObjective {
            evaluator: self,
            refs,
            weights,
        }
    }
}

pub struct ScoredObjective<'a> {
    evaluator: &'a MonteCarloEvaluator,
    refs: ReferenceValues,
    weights: FitnessWeights,
}

impl Objective for ScoredObjective<'_> {
    type Error = EvalError;

    fn evaluate(&self, genome: &Genome, ctx: EvalContext) -> Result<FitnessReport, EvalError> {
        self.evaluator.evaluate_in(genome, ctx, &self.refs, &self.weights)
    }
}
