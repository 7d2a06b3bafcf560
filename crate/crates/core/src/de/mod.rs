//! Differential evolution over the AODV parameter space.
//!
//! The loop is generational: every individual of generation `g` produces a
//! trial from the frozen generation-`g` population, and all replacements
//! take effect together. Randomness comes from one counter-based stream per
//! `(purpose, generation, individual)`, so a run is a pure function of its
//! configuration and seed.

mod init;
mod ops;

use std::error::Error as StdError;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use init::{diagonal_individual, initialize_population, subspace_fraction};
pub use ops::{
    binomial_crossover, blend_raw, blx_crossover, differential_mutant, mutate, mutation_indices,
    select, trial_wins, RawPair,
};

use crate::fitness::FitnessReport;
use crate::keyed::{Keyed, KeyedError};
use crate::numeric::exact_mean;
use crate::param_space::{Genome, ParamSpace};
use crate::rng::{stream, Purpose};

#[derive(Debug, thiserror::Error)]
pub enum DeError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("fitness is NaN (target {f_target}, trial {f_trial})")]
    NanFitness { f_target: f64, f_trial: f64 },
    #[error("evaluation failed in generation {generation}, individual {individual} for genome [{genome}]: {source}")]
    Evaluation {
        generation: usize,
        individual: usize,
        genome: Genome,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
    #[error("genome [{genome}] in generation {generation}, individual {individual} has NaN fitness")]
    NotFinite {
        generation: usize,
        individual: usize,
        genome: Genome,
    },
    #[error(transparent)]
    Keyed(#[from] KeyedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossoverKind {
    #[default]
    Blx,
    Binomial,
}

impl FromStr for CrossoverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blx" => Ok(Self::Blx),
            "binomial" => Ok(Self::Binomial),
            other => Err(format!("unknown crossover '{other}', expected blx or binomial")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub mu: f64,
    pub crossover_prob: f64,
    pub blx_alpha: f64,
    pub crossover_kind: CrossoverKind,
    pub base_seed: u64,
    /// Wall-clock limit checked between generations. Runs cut short by it
    /// are no longer reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<Duration>,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            pop_size: 8,
            generations: 50,
            mu: 0.5,
            crossover_prob: 0.9,
            blx_alpha: 0.2,
            crossover_kind: CrossoverKind::Blx,
            base_seed: 0,
            time_budget: None,
        }
    }
}

const DE_KEYS: &[&str] = &[
    "POP_SIZE",
    "GENERATIONS",
    "MU",
    "CROSSOVER_PROB",
    "BLX_ALPHA",
    "CROSSOVER",
    "SEED",
    "TIME_BUDGET_SECS",
];

impl DEConfig {
    pub fn check(&self) -> Result<(), DeError> {
        let bad = |m: String| Err(DeError::Config(m));
        if self.pop_size < 4 {
            return bad(format!("pop_size must be at least 4, got {}", self.pop_size));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(format!("crossover probability {} outside [0, 1]", self.crossover_prob));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mutation factor must be positive, got {}", self.mu));
        }
        if !(self.blx_alpha >= 0.0 && self.blx_alpha.is_finite()) {
            return bad(format!("BLX alpha must be non-negative, got {}", self.blx_alpha));
        }
        Ok(())
    }

    /// Reads `KEY=value` lines over the defaults. Unknown keys are errors.
    pub fn from_keyed(text: &str) -> Result<Self, DeError> {
        let k = Keyed::parse(text)?;
        k.deny_unknown(DE_KEYS)?;
        let d = Self::default();
        let cfg = Self {
            pop_size: k.get("POP_SIZE")?.unwrap_or(d.pop_size),
            generations: k.get("GENERATIONS")?.unwrap_or(d.generations),
            mu: k.get("MU")?.unwrap_or(d.mu),
            crossover_prob: k.get("CROSSOVER_PROB")?.unwrap_or(d.crossover_prob),
            blx_alpha: k.get("BLX_ALPHA")?.unwrap_or(d.blx_alpha),
            crossover_kind: k.get("CROSSOVER")?.unwrap_or(d.crossover_kind),
            base_seed: k.get("SEED")?.unwrap_or(d.base_seed),
            time_budget: k.get::<f64>("TIME_BUDGET_SECS")?.map(Duration::from_secs_f64),
        };
        cfg.check()?;
        Ok(cfg)
    }
}

/// Where an evaluation happens in the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalContext {
    pub generation: usize,
    pub individual: usize,
}

/// Anything that scores genomes; lower fitness is better.
pub trait Objective {
    type Error: StdError + Send + Sync + 'static;

    fn evaluate(&self, genome: &Genome, ctx: EvalContext) -> Result<FitnessReport, Self::Error>;
}

impl<F, E> Objective for F
where
    F: Fn(&Genome, EvalContext) -> Result<FitnessReport, E>,
    E: StdError + Send + Sync + 'static,
{
    type Error = E;

    fn evaluate(&self, genome: &Genome, ctx: EvalContext) -> Result<FitnessReport, E> {
        self(genome, ctx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Genome>,
    pub fitnesses: Vec<f64>,
    pub reports: Vec<FitnessReport>,
    pub generation: usize,
}

impl Population {
    pub fn best_index(&self) -> usize {
        // First minimum, so ties resolve the same way every run.
        let mut best = 0;
        for (i, &f) in self.fitnesses.iter().enumerate() {
            if f < self.fitnesses[best] {
                best = i;
            }
        }
        best
    }

    fn log(&self) -> GenerationLog {
        let best = self.best_index();
        GenerationLog {
            generation: self.generation,
            best_fitness: self.fitnesses[best],
            mean_fitness: exact_mean(&self.fitnesses).unwrap_or(f64::NAN),
            best_genome: self.members[best].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genome: Genome,
}

/// Per-generation CSV: `generation,best_fitness,mean_fitness,<genes>`.
pub fn generation_csv(log: &[GenerationLog], space: &ParamSpace) -> String {
    let mut out = format!("generation,best_fitness,mean_fitness,{}\n", space.csv_header());
    for entry in log {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{}",
            entry.generation,
            entry.best_fitness,
            entry.mean_fitness,
            entry.best_genome.to_csv_row(space)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_genome: Genome,
    pub best_report: FitnessReport,
    pub log: Vec<GenerationLog>,
    pub config: DEConfig,
    pub evaluations: u64,
    /// Simulator replications behind all evaluations.
    pub replications: u64,
    pub final_population: Population,
}

struct Tally {
    evaluations: u64,
    replications: u64,
}

fn score<O: Objective>(
    objective: &O,
    genome: &Genome,
    ctx: EvalContext,
    tally: &mut Tally,
) -> Result<FitnessReport, DeError> {
    let report = objective
        .evaluate(genome, ctx)
        .map_err(|e| DeError::Evaluation {
            generation: ctx.generation,
            individual: ctx.individual,
            genome: genome.clone(),
            source: Box::new(e),
        })?;
    if report.fitness.is_nan() {
        return Err(DeError::NotFinite {
            generation: ctx.generation,
            individual: ctx.individual,
            genome: genome.clone(),
        });
    }
    tally.evaluations += 1;
    tally.replications += report.replications.len() as u64;
    Ok(report)
}

/// Produces the trial vector for individual `i` of `pop`.
pub fn make_trial(
    pop: &Population,
    i: usize,
    space: &ParamSpace,
    cfg: &DEConfig,
) -> Result<Genome, DeError> {
    let g = pop.generation as u64 + 1;
    let mut mrng = stream(cfg.base_seed, Purpose::Mutation, g, i as u64);
    let mutant = mutate(&pop.members, i, cfg.mu, space, &mut mrng)?;
    let mut crng = stream(cfg.base_seed, Purpose::Crossover, g, i as u64);
    Ok(match cfg.crossover_kind {
        CrossoverKind::Binomial => {
            binomial_crossover(&pop.members[i], &mutant, cfg.crossover_prob, space, &mut crng)
        }
        CrossoverKind::Blx => blx_crossover(&pop.members[i], &mutant, cfg.blx_alpha, space, &mut crng).0,
    })
}

pub fn run<O: Objective>(
    space: &ParamSpace,
    cfg: &DEConfig,
    objective: &O,
) -> Result<OptimizationResult, DeError> {
    cfg.check()?;
    let started = Instant::now();
    let mut tally = Tally {
        evaluations: 0,
        replications: 0,
    };

    let members = initialize_population(space, cfg.pop_size, cfg.base_seed);
    let mut reports = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let ctx = EvalContext {
            generation: 0,
            individual: i,
        };
        reports.push(score(objective, m, ctx, &mut tally)?);
    }
    let mut pop = Population {
        fitnesses: reports.iter().map(|r| r.fitness).collect(),
        members,
        reports,
        generation: 0,
    };
    let mut log = vec![pop.log()];

    for generation in 1..=cfg.generations {
        if cfg.time_budget.is_some_and(|b| started.elapsed() >= b) {
            break;
        }
        let mut next = pop.clone();
        for i in 0..cfg.pop_size {
            let trial = make_trial(&pop, i, space, cfg)?;
            let ctx = EvalContext {
                generation,
                individual: i,
            };
            let report = score(objective, &trial, ctx, &mut tally)?;
            if trial_wins(pop.fitnesses[i], report.fitness)? {
                next.members[i] = trial;
                next.fitnesses[i] = report.fitness;
                next.reports[i] = report;
            }
        }
        next.generation = generation;
        pop = next;
        log.push(pop.log());
    }

    let best = pop.best_index();
    Ok(OptimizationResult {
        best_genome: pop.members[best].clone(),
        best_report: pop.reports[best].clone(),
        log,
        config: cfg.clone(),
        evaluations: tally.evaluations,
        replications: tally.replications,
        final_population: pop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn sphere(g: &Genome, _: EvalContext) -> Result<FitnessReport, Infallible> {
        let space = ParamSpace::aodv();
        let f = (0..g.0.len())
            .map(|i| {
                let s = space.gene(i);
                ((g.0[i] - s.lower) / s.width()).powi(2)
            })
            .sum();
        Ok(FitnessReport::from_value(f))
    }

    #[test]
    fn zero_generations_logs_initial_population() {
        let cfg = DEConfig {
            generations: 0,
            ..DEConfig::default()
        };
        let r = run(&ParamSpace::aodv(), &cfg, &sphere).unwrap();
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.evaluations, 8);
        assert_eq!(r.best_report.fitness, r.log[0].best_fitness);
    }

    #[test]
    fn keyed_config() {
        let cfg = DEConfig::from_keyed("POP_SIZE=10\nCROSSOVER=binomial\nMU=0.7\nSEED=9\n").unwrap();
        assert_eq!(cfg.pop_size, 10);
        assert_eq!(cfg.crossover_kind, CrossoverKind::Binomial);
        assert_eq!(cfg.mu, 0.7);
        assert_eq!(cfg.base_seed, 9);
        assert!(DEConfig::from_keyed("POP_SIZE=3").is_err());
        assert!(DEConfig::from_keyed("CROSSOVER_PROB=1.5").is_err());
        assert!(DEConfig::from_keyed("POPSIZE=8").is_err());
    }

    #[test]
    fn evaluator_failure_carries_genome() {
        #[derive(Debug, thiserror::Error)]
        #[error("boom")]
        struct Boom;
        let failing = |g: &Genome, ctx: EvalContext| {
            if ctx.generation == 1 && ctx.individual == 2 {
                Err(Boom)
            } else {
                Ok(FitnessReport::from_value(g.0[0]))
            }
        };
        match run(&ParamSpace::aodv(), &DEConfig::default(), &failing) {
            Err(DeError::Evaluation {
                generation: 1,
                individual: 2,
                genome,
                ..
            }) => assert!(ParamSpace::aodv().is_valid(&genome)),
            other => panic!("{other:?}"),
        }
    }
}
