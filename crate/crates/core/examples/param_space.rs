//! The 11-gene AODV search space: bounds, defaults, repair and file formats.

use aodv_tune::param_space::{reference_tuned, Genome, ParamSpace};

fn main() {
    let space = ParamSpace::aodv();
    println!("{:<26} {:>8} {:>8} {:>8}  kind", "gene", "lower", "upper", "rfc");
    for g in space.genes() {
        println!(
            "{:<26} {:>8} {:>8} {:>8}  {:?}",
            g.name, g.lower, g.upper, g.rfc_default, g.kind
        );
    }

    // Out-of-range and fractional values are clamped and rounded.
    let mut raw = space.rfc_default();
    raw.0[0] = -3.0;
    raw.0[2] = 7.6;
    let fixed = space.repair(&raw).unwrap();
    println!("\nrepaired: {fixed}");

    let tuned = reference_tuned();
    println!("\nkeyed form of the reference tuned genome:\n{}", tuned.to_keyed(&space));
    let back = Genome::from_keyed(&tuned.to_keyed(&space), &space).unwrap();
    assert_eq!(back, tuned);
    println!("csv: {}\n     {}", space.csv_header(), tuned.to_csv_row(&space));

    let mut bad = tuned;
    bad.0[aodv_tune::param_space::gene::TTL_THRESHOLD] = 61.0;
    for v in space.validate(&bad) {
        println!("violation: {v}");
    }
}
