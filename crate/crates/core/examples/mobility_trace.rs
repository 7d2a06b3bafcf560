//! Manhattan-grid mobility, written as a trace file and replayed.

use aodv_tune::param_space::ParamSpace;
use aodv_tune::sim::{generate_grid, simulate, AodvConfig, GridMobility, Scenario, ScenarioSpec, Trace};

fn main() {
    let spec = ScenarioSpec::grid("g1_20_128", 600.0, 400.0, 20, 128.0);
    let trace = generate_grid(&GridMobility::default(), spec.width, spec.height, spec.vehicle_count, spec.sim_duration);
    for node in 0..3 {
        let path: Vec<String> = trace
            .samples(node)
            .iter()
            .step_by(30)
            .map(|s| format!("({:.0},{:.0})", s.x, s.y))
            .collect();
        println!("vehicle {node}: {}", path.join(" "));
    }

    let dir = std::env::temp_dir().join("aodv-tune-trace-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grid.trace");
    trace.write(&path).unwrap();
    let loaded = Trace::load(&path).unwrap();
    println!("wrote {} ({} nodes)", path.display(), loaded.node_count());

    let replay = Scenario::with_trace(spec.clone(), loaded).unwrap();
    let cfg = AodvConfig::from_genome(&ParamSpace::aodv().rfc_default(), &ParamSpace::aodv()).unwrap();
    let a = simulate(&cfg, &replay, 5);
    let b = simulate(&cfg, &Scenario::new(spec).unwrap(), 5);
    println!("replayed trace pdr {:.4}, energy {:.2} J", a.pdr, a.energy_joules);
    println!("generated grid pdr {:.4}, energy {:.2} J", b.pdr, b.energy_joules);
}
