//! Diagonal initialization: individual p lands in band p of every gene.

use aodv_tune::de::{initialize_population, subspace_fraction};
use aodv_tune::param_space::ParamSpace;

fn main() {
    let space = ParamSpace::aodv();
    let pop = initialize_population(&space, 8, 2024);
    for (p, g) in pop.iter().enumerate() {
        let fractions: Vec<String> = space
            .genes()
            .iter()
            .zip(g.0)
            .map(|(s, v)| format!("{:.3}", subspace_fraction(v, s.rfc_default, s)))
            .collect();
        println!("#{p} band [{:.3}, {:.3})  {}", p as f64 / 8.0, (p + 1) as f64 / 8.0, fractions.join(" "));
        println!("   {g}");
    }
}
