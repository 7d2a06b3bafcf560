//! Differential evolution on a cheap analytic objective.
//!
//! `cargo run --example de_sphere -- binomial`

use std::convert::Infallible;

use aodv_tune::de::{run, CrossoverKind, DEConfig, EvalContext};
use aodv_tune::fitness::FitnessReport;
use aodv_tune::param_space::{Genome, ParamSpace};

fn main() {
    let kind: CrossoverKind = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("blx or binomial"))
        .unwrap_or_default();
    let space = ParamSpace::aodv();
    let target = Genome(std::array::from_fn(|i| {
        let g = space.gene(i);
        g.lower + 0.3 * g.width()
    }));
    let objective = |g: &Genome, _: EvalContext| -> Result<FitnessReport, Infallible> {
        let f = space
            .genes()
            .iter()
            .enumerate()
            .map(|(i, s)| ((g.0[i] - target.0[i]) / s.width()).powi(2))
            .sum();
        Ok(FitnessReport::from_value(f))
    };
    let cfg = DEConfig {
        crossover_kind: kind,
        generations: 100,
        base_seed: 7,
        ..DEConfig::default()
    };
    let result = run(&space, &cfg, &objective).unwrap();
    for entry in result.log.iter().step_by(10) {
        println!(
            "gen {:>3}  best {:.6}  mean {:.6}",
            entry.generation, entry.best_fitness, entry.mean_fitness
        );
    }
    println!("best: {}", result.best_genome);
    println!("evaluations: {}", result.evaluations);
}
