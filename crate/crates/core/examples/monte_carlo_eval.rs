//! Parallel Monte-Carlo scoring of the RFC defaults and a tuned genome.

use std::sync::Arc;

use aodv_tune::campaign::builtin_scenario;
use aodv_tune::fitness::FitnessWeights;
use aodv_tune::mc_eval::{EvalConfig, MonteCarloEvaluator};
use aodv_tune::param_space::reference_tuned;
use aodv_tune::sim::Scenario;

fn main() {
    let scenario = Arc::new(Scenario::new(builtin_scenario("g1_20_128").unwrap()).unwrap());
    let eval = MonteCarloEvaluator::new(
        scenario,
        EvalConfig {
            replications: 12,
            base_seed: 11,
            ..EvalConfig::default()
        },
    )
    .unwrap();
    let weights = FitnessWeights::default();
    let refs = eval.evaluate_baseline().unwrap();
    println!("baseline: energy {:.3} J, pdr {:.4}, pdr floor {:.4}", refs.energy, refs.pdr, weights.pdr_floor(&refs));

    let report = eval.evaluate(&reference_tuned(), &refs, &weights).unwrap();
    for r in &report.replications {
        println!("  #{:>2} seed {:>20}  energy {:>9.3}  pdr {:.4}", r.index, r.seed, r.outcome.energy_joules, r.outcome.pdr);
    }
    println!(
        "tuned: fitness {:.4}{}, energy {:.3} J, pdr {:.4}",
        report.fitness,
        if report.penalized { " (penalized)" } else { "" },
        report.mean_energy,
        report.mean_pdr
    );
    println!("rfc fitness {:.4}", eval.baseline_report(&weights).unwrap().fitness);
    println!("simulator runs: {}", eval.replications_run());
}
