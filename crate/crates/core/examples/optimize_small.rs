//! A short optimization campaign writing the full artifact set.
//!
//! `cargo run --release --example optimize_small -- out/small`

use aodv_tune::campaign::{builtin_scenario, cmd_optimize, CampaignConfig, Mode};
use aodv_tune::param_space::ParamSpace;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/optimize_small".into());
    let mut cfg = CampaignConfig::new(Mode::Optimize, vec![builtin_scenario("g1_20_128").unwrap()], 2024, &out);
    cfg.de.generations = 5;
    cfg.eval.replications = 6;
    let o = cmd_optimize(&cfg).unwrap();
    for entry in &o.result.log {
        println!("gen {:>2}  best {:.4}  mean {:.4}", entry.generation, entry.best_fitness, entry.mean_fitness);
    }
    println!("rfc fitness {:.4}, best {:.4}", o.rfc_report.fitness, o.result.best_report.fitness);
    println!("{}", o.result.best_genome.to_keyed(&ParamSpace::aodv()));
    for a in &o.artifacts {
        println!("{}  {}", &a.sha256[..16], a.path);
    }
    println!("config hash {}", cfg.config_hash());
}
