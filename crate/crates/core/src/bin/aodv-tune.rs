use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use aodv_tune::campaign::{
    cmd_compare, cmd_evaluate, cmd_optimize, cmd_validate, load_genome, resolve_scenario,
    validation_suite, CampaignConfig, CampaignError, Mode, VALIDATION_HEADER,
};
use aodv_tune::de::{CrossoverKind, DEConfig};
use aodv_tune::fitness::PdrThreshold;
use aodv_tune::mc_eval::NoiseMode;
use aodv_tune::param_space::ParamSpace;
use aodv_tune::sim::ScenarioSpec;

/// Energy-aware AODV tuning with differential evolution.
#[derive(Parser)]
#[command(name = "aodv-tune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Base seed for every random stream; drawn from entropy and echoed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulator replications per evaluation.
    #[arg(long, global = true, default_value_t = 24)]
    replications: usize,
    /// Worker threads for replications (defaults to available cores).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Salt replication seeds with generation and individual.
    #[arg(long, global = true)]
    fresh_noise: bool,
    /// Read the PDR floor as a plain fraction of the baseline PDR.
    #[arg(long, global = true)]
    literal_pdr_threshold: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run differential evolution on one training scenario.
    Optimize(OptimizeArgs),
    /// Monte-Carlo evaluation of one genome.
    Evaluate {
        /// Scenario file or built-in name (e.g. g1_20_128).
        #[arg(long)]
        scenario: String,
        /// Genome file (keyed text or CSV); RFC defaults when absent.
        #[arg(long)]
        genome: Option<PathBuf>,
    },
    /// Compare a genome with the RFC defaults across scenarios.
    Validate {
        #[arg(long)]
        genome: PathBuf,
        /// Repeatable; the nine built-in validation scenarios when absent.
        #[arg(long)]
        scenario: Vec<String>,
    },
    /// Compare two genomes across scenarios.
    Compare {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        against: PathBuf,
        #[arg(long)]
        scenario: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Crossover {
    Blx,
    Binomial,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Scenario file or built-in name (e.g. g1_20_128).
    #[arg(long)]
    scenario: String,
    /// Keyed optimizer settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long, value_enum)]
    crossover: Option<Crossover>,
    /// BLX-alpha extension factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Mutation factor.
    #[arg(long)]
    mu: Option<f64>,
    /// Crossover probability for binomial crossover.
    #[arg(long)]
    pc: Option<f64>,
    /// Stop after this many seconds (breaks reproducibility).
    #[arg(long)]
    time_budget: Option<f64>,
}

fn scenarios(args: &[String]) -> Result<Vec<ScenarioSpec>, CampaignError> {
    if args.is_empty() {
        return Ok(validation_suite());
    }
    args.iter().map(|a| resolve_scenario(a)).collect()
}

fn de_config(args: &OptimizeArgs) -> Result<DEConfig, CampaignError> {
    let mut de = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CampaignError::Io {
                path: path.clone(),
                source,
            })?;
            DEConfig::from_keyed(&text)?
        }
        None => DEConfig::default(),
    };
    de.generations = args.generations.unwrap_or(de.generations);
    de.pop_size = args.pop_size.unwrap_or(de.pop_size);
    de.blx_alpha = args.alpha.unwrap_or(de.blx_alpha);
    de.mu = args.mu.unwrap_or(de.mu);
    de.crossover_prob = args.pc.unwrap_or(de.crossover_prob);
    if let Some(c) = args.crossover {
        de.crossover_kind = match c {
            Crossover::Blx => CrossoverKind::Blx,
            Crossover::Binomial => CrossoverKind::Binomial,
        };
    }
    if let Some(secs) = args.time_budget {
        de.time_budget = Some(Duration::from_secs_f64(secs));
    }
    Ok(de)
}

fn run(cli: Cli) -> Result<(), CampaignError> {
    let space = ParamSpace::aodv();
    let c = &cli.common;
    let seed = c.seed.unwrap_or_else(rand::random);
    eprintln!("seed: {seed}");

    let (mode, scenario_list) = match &cli.command {
        Command::Optimize(a) => (Mode::Optimize, vec![resolve_scenario(&a.scenario)?]),
        Command::Evaluate { scenario, .. } => (Mode::Evaluate, vec![resolve_scenario(scenario)?]),
        Command::Validate { scenario, .. } => (Mode::Validate, scenarios(scenario)?),
        Command::Compare { scenario, .. } => (Mode::Compare, scenarios(scenario)?),
    };
    let mut cfg = CampaignConfig::new(mode, scenario_list, seed, &c.out);
    cfg.eval.replications = c.replications;
    if let Some(p) = c.parallelism {
        cfg.eval.parallelism = p;
    }
    if c.fresh_noise {
        cfg.eval.noise = NoiseMode::Fresh;
    }
    if c.literal_pdr_threshold {
        cfg.weights.threshold = PdrThreshold::LiteralFraction;
    }

    let started = Instant::now();
    match &cli.command {
        Command::Optimize(a) => {
            cfg.de = DEConfig {
                base_seed: seed,
                ..de_config(a)?
            };
            let o = cmd_optimize(&cfg)?;
            println!("baseline: energy {:.6} J, pdr {:.6}", o.references.energy, o.references.pdr);
            println!("rfc fitness:  {:.6}", o.rfc_report.fitness);
            println!(
                "best fitness: {:.6} (energy {:.6} J, pdr {:.6}{})",
                o.result.best_report.fitness,
                o.result.best_report.mean_energy,
                o.result.best_report.mean_pdr,
                if o.result.best_report.penalized { ", penalized" } else { "" }
            );
            println!("best genome:  {}", o.result.best_genome.to_csv_row(&space));
            println!("replications: {}", o.simulator_replications);
        }
        Command::Evaluate { genome, .. } => {
            cfg.candidate = genome.as_deref().map(|p| load_genome(p, &space)).transpose()?;
            let o = cmd_evaluate(&cfg)?;
            println!("{}", o.report.to_json());
        }
        Command::Validate { genome, .. } => {
            cfg.candidate = Some(load_genome(genome, &space)?);
            print_rows(&cmd_validate(&cfg)?.rows);
        }
        Command::Compare { genome, against, .. } => {
            cfg.candidate = Some(load_genome(genome, &space)?);
            cfg.reference = Some(load_genome(against, &space)?);
            print_rows(&cmd_compare(&cfg)?.rows);
        }
    }
    eprintln!("artifacts in {} ({:.1?})", c.out.display(), started.elapsed());
    Ok(())
}

fn print_rows(rows: &[aodv_tune::campaign::ComparisonRow]) {
    println!("{VALIDATION_HEADER}");
    for r in rows {
        println!("{}", r.to_csv_row());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
