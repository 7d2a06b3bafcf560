//! Batch workflows behind the command-line tool: optimize, evaluate,
//! validate and compare. Every artifact is a pure function of the
//! configuration and seed; worker parallelism never reaches a file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::de::{self, generation_csv, DEConfig, DeError, OptimizationResult};
use crate::fitness::{FitnessReport, FitnessWeights, ReferenceValues};
use crate::mc_eval::{EvalConfig, EvalError, MonteCarloEvaluator};
use crate::param_space::{Genome, GenomeError, ParamSpace, Violation};
use crate::sim::{Scenario, ScenarioSpec, SimError};
use crate::stats::{kruskal_wallis, ks_normality, SampleSet, TestResult};

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("scenario '{name}': {source}")]
    Scenario {
        name: String,
        #[source]
        source: SimError,
    },
    #[error("genome file {}: {source}", .path.display())]
    Genome {
        path: PathBuf,
        #[source]
        source: GenomeError,
    },
    #[error("genome violates the parameter space:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    InvalidGenome(Vec<Violation>),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    De(#[from] DeError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Optimize,
    Evaluate,
    Validate,
    Compare,
}

/// Area of the built-in scenario families, in metres.
fn family_area(family: &str) -> Option<(f64, f64)> {
    match family {
        "g1" => Some((600.0, 400.0)),
        "g2" => Some((600.0, 600.0)),
        _ => None,
    }
}

/// Built-in scenarios are named `<family>_<vehicles>_<kbps>`, e.g.
/// `g1_20_128` or `g2_60_1024`.
pub fn builtin_scenario(name: &str) -> Option<ScenarioSpec> {
    let mut parts = name.split('_');
    let (w, h) = family_area(&parts.next()?.to_ascii_lowercase())?;
    let vehicles: usize = parts.next()?.parse().ok()?;
    let rate: f64 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || vehicles < 2 || !(rate > 0.0) {
        return None;
    }
    Some(ScenarioSpec::grid(&name.to_ascii_lowercase(), w, h, vehicles, rate))
}

/// The nine validation scenarios: the larger area with 30, 45 and 60
/// vehicles at 256, 512 and 1024 kbit/s.
pub fn validation_suite() -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for vehicles in [30, 45, 60] {
        for rate in [256, 512, 1024] {
            out.push(builtin_scenario(&format!("g2_{vehicles}_{rate}")).expect("valid name"));
        }
    }
    out
}

/// A scenario given as a file path or a built-in name.
pub fn resolve_scenario(arg: &str) -> Result<ScenarioSpec, CampaignError> {
    let path = Path::new(arg);
    if path.is_file() {
        return ScenarioSpec::load(path).map_err(|source| CampaignError::Scenario {
            name: arg.to_string(),
            source,
        });
    }
    builtin_scenario(arg).ok_or_else(|| {
        CampaignError::Usage(format!(
            "scenario '{arg}' is neither a readable file nor a built-in name like g1_20_128"
        ))
    })
}

pub fn load_genome(path: &Path, space: &ParamSpace) -> Result<Genome, CampaignError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let genome = Genome::parse_any(&text, space).map_err(|source| CampaignError::Genome {
        path: path.to_path_buf(),
        source,
    })?;
    let violations = space.validate(&genome);
    if !violations.is_empty() {
        return Err(CampaignError::InvalidGenome(violations));
    }
    Ok(genome)
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub scenarios: Vec<ScenarioSpec>,
    pub de: DEConfig,
    pub eval: EvalConfig,
    pub weights: FitnessWeights,
    pub out_dir: PathBuf,
    /// Genome under test for evaluate, validate and compare.
    pub candidate: Option<Genome>,
    /// Second genome for compare; RFC defaults otherwise.
    pub reference: Option<Genome>,
}

impl CampaignConfig {
    /// Uses `seed` for both the optimizer and the replication seeds.
    pub fn new(mode: Mode, scenarios: Vec<ScenarioSpec>, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            mode,
            scenarios,
            de: DEConfig {
                base_seed: seed,
                ..DEConfig::default()
            },
            eval: EvalConfig {
                base_seed: seed,
                ..EvalConfig::default()
            },
            weights: FitnessWeights::default(),
            out_dir: out_dir.into(),
            candidate: None,
            reference: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.eval.base_seed
    }

    fn check(&self) -> Result<(), CampaignError> {
        if self.scenarios.is_empty() {
            return Err(CampaignError::Usage("no scenario given".into()));
        }
        if matches!(self.mode, Mode::Optimize | Mode::Evaluate) && self.scenarios.len() != 1 {
            return Err(CampaignError::Usage(format!(
                "{:?} takes exactly one scenario, got {}",
                self.mode,
                self.scenarios.len()
            )));
        }
        self.eval.check()?;
        if self.mode == Mode::Optimize {
            self.de.check()?;
        }
        Ok(())
    }

    /// Everything that determines artifact contents, as canonical JSON.
    /// Worker parallelism is deliberately absent.
    fn canonical(&self) -> serde_json::Value {
        let space = ParamSpace::aodv();
        let mut de = serde_json::to_value(&self.de).expect("config serializes");
        if let Some(obj) = de.as_object_mut() {
            obj.remove("time_budget");
        }
        serde_json::json!({
            "mode": self.mode,
            "seed": self.seed(),
            "scenarios": self.scenarios.iter().map(ScenarioSpec::to_keyed).collect::<Vec<_>>(),
            "de": if self.mode == Mode::Optimize { de } else { serde_json::Value::Null },
            "replications": self.eval.replications,
            "noise": self.eval.noise,
            "weights": self.weights,
            "candidate": self.candidate.map(|g| g.to_csv_row(&space)),
            "reference": self.reference.map(|g| g.to_csv_row(&space)),
        })
    }

    pub fn config_hash(&self) -> String {
        hex_sha256(self.canonical().to_string().as_bytes())
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: Mode,
    seed: u64,
    config_hash: &'a str,
    config: serde_json::Value,
    simulator_replications: u64,
    artifacts: &'a [ArtifactEntry],
}

/// Collects artifacts as they are written.
struct Artifacts {
    dir: PathBuf,
    config_hash: String,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    fn new(cfg: &CampaignConfig) -> Result<Self, CampaignError> {
        fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
        Ok(Self {
            dir: cfg.out_dir.clone(),
            config_hash: cfg.config_hash(),
            entries: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CampaignError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.entries.push(ArtifactEntry {
            path: name.to_string(),
            sha256: hex_sha256(contents.as_bytes()),
            config_hash: self.config_hash.clone(),
        });
        Ok(())
    }

    /// Writes `manifest.json` and returns the entries it lists.
    fn finish(self, cfg: &CampaignConfig, replications: u64) -> Result<Vec<ArtifactEntry>, CampaignError> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            mode: cfg.mode,
            seed: cfg.seed(),
            config_hash: &self.config_hash,
            config: cfg.canonical(),
            simulator_replications: replications,
            artifacts: &self.entries,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(self.entries)
    }
}

fn evaluator(spec: &ScenarioSpec, eval: &EvalConfig) -> Result<MonteCarloEvaluator, CampaignError> {
    let scenario = Scenario::new(spec.clone()).map_err(|source| CampaignError::Scenario {
        name: spec.name.clone(),
        source,
    })?;
    Ok(MonteCarloEvaluator::new(Arc::new(scenario), eval.clone())?)
}

#[derive(Debug, Serialize)]
struct BaselineFile<'a> {
    scenario: &'a str,
    references: ReferenceValues,
    report: &'a FitnessReport,
}

fn baseline_json(scenario: &str, refs: ReferenceValues, report: &FitnessReport) -> String {
    let b = BaselineFile {
        scenario,
        references: refs,
        report,
    };
    serde_json::to_string_pretty(&b).expect("baseline serializes") + "\n"
}

#[derive(Debug)]
pub struct OptimizeOutcome {
    pub result: OptimizationResult,
    pub references: ReferenceValues,
    pub rfc_report: FitnessReport,
    pub artifacts: Vec<ArtifactEntry>,
    pub simulator_replications: u64,
}

/// Baseline, DE run, then artifacts: best genome (keyed text and CSV),
/// generation log, winner report, baseline and manifest.
pub fn cmd_optimize(cfg: &CampaignConfig) -> Result<OptimizeOutcome, CampaignError> {
    cfg.check()?;
    let space = ParamSpace::aodv();
    let spec = &cfg.scenarios[0];
    let ev = evaluator(spec, &cfg.eval)?;
    let refs = ev.evaluate_baseline()?;
    let rfc_report = ev.baseline_report(&cfg.weights)?;
    let result = de::run(&space, &cfg.de, &ev.objective(refs, cfg.weights))?;

    let mut out = Artifacts::new(cfg)?;
    out.write("best_genome.txt", &result.best_genome.to_keyed(&space))?;
    out.write(
        "best_genome.csv",
        &format!("{}\n{}\n", space.csv_header(), result.best_genome.to_csv_row(&space)),
    )?;
    out.write("generations.csv", &generation_csv(&result.log, &space))?;
    out.write("best_report.json", &(result.best_report.to_json() + "\n"))?;
    out.write("baseline.json", &baseline_json(&spec.name, refs, &rfc_report))?;
    let replications = ev.replications_run();
    let artifacts = out.finish(cfg, replications)?;
    Ok(OptimizeOutcome {
        result,
        references: refs,
        rfc_report,
        artifacts,
        simulator_replications: replications,
    })
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub report: FitnessReport,
    pub references: ReferenceValues,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Monte-Carlo evaluation of one genome against the scenario's RFC baseline.
pub fn cmd_evaluate(cfg: &CampaignConfig) -> Result<EvaluateOutcome, CampaignError> {
    cfg.check()?;
    let space = ParamSpace::aodv();
    let genome = cfg.candidate.unwrap_or_else(|| space.rfc_default());
    let violations = space.validate(&genome);
    if !violations.is_empty() {
        return Err(CampaignError::InvalidGenome(violations));
    }
    let spec = &cfg.scenarios[0];
    let ev = evaluator(spec, &cfg.eval)?;
    let refs = ev.evaluate_baseline()?;
    let report = ev.evaluate(&genome, &refs, &cfg.weights)?;
    let mut out = Artifacts::new(cfg)?;
    out.write("report.json", &(report.to_json() + "\n"))?;
    out.write("baseline.json", &baseline_json(&spec.name, refs, &ev.baseline_report(&cfg.weights)?))?;
    let artifacts = out.finish(cfg, ev.replications_run())?;
    Ok(EvaluateOutcome {
        report,
        references: refs,
        artifacts,
    })
}

/// One metric of one scenario in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub metric: &'static str,
    pub de_mean: f64,
    pub rfc_mean: f64,
    /// `100 * (rfc - de) / rfc`: positive when the candidate is lower.
    pub delta_pct: f64,
    /// `rfc - de`.
    pub delta_abs: f64,
    pub ks_de: Option<TestResult>,
    pub ks_rfc: Option<TestResult>,
    pub kw: TestResult,
}

pub const VALIDATION_HEADER: &str =
    "scenario,metric,de_mean,rfc_mean,delta_pct,delta_abs,ks_p_de,ks_p_rfc,kw_h,kw_p,reject_at_95";

impl ComparisonRow {
    pub fn to_csv_row(&self) -> String {
        let p = |t: &Option<TestResult>| t.map(|t| format!("{:?}", t.p_value)).unwrap_or_default();
        format!(
            "{},{},{:?},{:?},{:?},{:?},{},{},{:?},{:?},{}",
            self.scenario,
            self.metric,
            self.de_mean,
            self.rfc_mean,
            self.delta_pct,
            self.delta_abs,
            p(&self.ks_de),
            p(&self.ks_rfc),
            self.kw.statistic,
            self.kw.p_value,
            self.kw.reject_at_95
        )
    }
}

fn compare_metric(
    scenario: &str,
    metric: &'static str,
    de: Vec<f64>,
    rfc: Vec<f64>,
    de_mean: f64,
    rfc_mean: f64,
) -> ComparisonRow {
    let a = SampleSet::new("de", de);
    let b = SampleSet::new("rfc", rfc);
    let kw = kruskal_wallis(&[a.clone(), b.clone()]).unwrap_or(TestResult {
        statistic: 0.0,
        p_value: 1.0,
        reject_at_95: false,
    });
    let delta_abs = rfc_mean - de_mean;
    ComparisonRow {
        scenario: scenario.to_string(),
        metric,
        de_mean,
        rfc_mean,
        delta_pct: if rfc_mean != 0.0 {
            100.0 * delta_abs / rfc_mean
        } else {
            0.0
        },
        delta_abs,
        ks_de: ks_normality(&a).ok(),
        ks_rfc: ks_normality(&b).ok(),
        kw,
    }
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub rows: Vec<ComparisonRow>,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Candidate vs reference genome on every scenario, with the same
/// replication seeds for both.
pub fn cmd_compare(cfg: &CampaignConfig) -> Result<CompareOutcome, CampaignError> {
    cfg.check()?;
    let space = ParamSpace::aodv();
    let candidate = cfg
        .candidate
        .ok_or_else(|| CampaignError::Usage("compare needs a candidate genome".into()))?;
    let reference = cfg.reference.unwrap_or_else(|| space.rfc_default());
    for g in [&candidate, &reference] {
        let v = space.validate(g);
        if !v.is_empty() {
            return Err(CampaignError::InvalidGenome(v));
        }
    }

    let mut rows = Vec::new();
    let mut summary = String::from(
        "scenario,energy_de,energy_rfc,energy_delta_pct,pdr_de,pdr_rfc,pdr_delta_pct,pdr_delta_abs\n",
    );
    let mut samples = String::from("scenario,config,replication,seed,energy_joules,pdr\n");
    let mut replications = 0;
    for spec in &cfg.scenarios {
        let ev = evaluator(spec, &cfg.eval)?;
        let refs = ev.evaluate_baseline()?;
        let de = ev.evaluate(&candidate, &refs, &cfg.weights)?;
        let rfc = ev.evaluate(&reference, &refs, &cfg.weights)?;
        replications += ev.replications_run();
        let energy = compare_metric(&spec.name, "energy", de.energies(), rfc.energies(), de.mean_energy, rfc.mean_energy);
        let pdr = compare_metric(&spec.name, "pdr", de.pdrs(), rfc.pdrs(), de.mean_pdr, rfc.mean_pdr);
        let _ = writeln!(
            summary,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            spec.name,
            energy.de_mean,
            energy.rfc_mean,
            energy.delta_pct,
            pdr.de_mean,
            pdr.rfc_mean,
            pdr.delta_pct,
            pdr.delta_abs
        );
        for (label, report) in [("de", &de), ("rfc", &rfc)] {
            for r in &report.replications {
                let _ = writeln!(
                    samples,
                    "{},{label},{},{},{:?},{:?}",
                    spec.name, r.index, r.seed, r.outcome.energy_joules, r.outcome.pdr
                );
            }
        }
        rows.push(energy);
        rows.push(pdr);
    }

    let mut report = format!("{VALIDATION_HEADER}\n");
    for row in &rows {
        report.push_str(&row.to_csv_row());
        report.push('\n');
    }
    let mut out = Artifacts::new(cfg)?;
    out.write("validation.csv", &report)?;
    out.write("validation_summary.csv", &summary)?;
    out.write("replications.csv", &samples)?;
    out.write(
        "genomes.csv",
        &format!(
            "config,{}\nde,{}\nrfc,{}\n",
            space.csv_header(),
            candidate.to_csv_row(&space),
            reference.to_csv_row(&space)
        ),
    )?;
    let artifacts = out.finish(cfg, replications)?;
    Ok(CompareOutcome { rows, artifacts })
}

/// Candidate against the RFC defaults.
pub fn cmd_validate(cfg: &CampaignConfig) -> Result<CompareOutcome, CampaignError> {
    let mut cfg = cfg.clone();
    cfg.reference = None;
    cmd_compare(&cfg)
}
