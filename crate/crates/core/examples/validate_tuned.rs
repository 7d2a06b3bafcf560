//! Validate the reference tuned genome against RFC defaults on a few scenarios.
//!
//! Pass `full` to run the whole nine-scenario suite.

use aodv_tune::campaign::{builtin_scenario, cmd_validate, validation_suite, CampaignConfig, Mode, VALIDATION_HEADER};
use aodv_tune::param_space::reference_tuned;

fn main() {
    let full = std::env::args().nth(1).as_deref() == Some("full");
    let scenarios = if full {
        validation_suite()
    } else {
        ["g2_30_256", "g2_60_1024"].iter().map(|n| builtin_scenario(n).unwrap()).collect()
    };
    let mut cfg = CampaignConfig::new(Mode::Validate, scenarios, 3, "out/validate_tuned");
    cfg.eval.replications = 8;
    cfg.candidate = Some(reference_tuned());
    let o = cmd_validate(&cfg).unwrap();
    println!("{VALIDATION_HEADER}");
    for row in &o.rows {
        println!("{}", row.to_csv_row());
    }
}
