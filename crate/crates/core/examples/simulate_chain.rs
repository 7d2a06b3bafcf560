//! A static three-hop chain: route discovery, delivery and energy audit.

use aodv_tune::param_space::{reference_tuned, ParamSpace};
use aodv_tune::sim::{ring_ttl_sequence, simulate_detailed, AodvConfig, Scenario, ScenarioSpec, SimOptions};

fn main() {
    let positions = [[0.0, 0.0], [200.0, 0.0], [400.0, 0.0], [600.0, 0.0]];
    let mut spec = ScenarioSpec::stationary("chain", &positions, &[(0, 3)], 64.0, 60.0, 80.0);
    spec.channel.fading = false;
    let scenario = Scenario::new(spec).unwrap();

    let space = ParamSpace::aodv();
    for (name, cfg) in [
        ("rfc", AodvConfig::rfc()),
        ("tuned", AodvConfig::from_genome(&reference_tuned(), &space).unwrap()),
    ] {
        println!("{name}: expanding ring TTLs {:?}", ring_ttl_sequence(&cfg));
        let run = simulate_detailed(&cfg, &scenario, 1, SimOptions { record_frames: true });
        let o = &run.outcome;
        println!(
            "  delivered {}/{} (pdr {:.3}), energy {:.3} J, hello {}, rreq {}, rrep {}",
            o.data_packets_delivered, o.data_packets_sent, o.pdr, o.energy_joules,
            o.hello_count, o.rreq_count, o.rrep_count
        );
        println!("  per-node energy {:?}", run.energy_per_node.iter().map(|e| (e * 1e3).round() / 1e3).collect::<Vec<_>>());
        let frames = run.frames.unwrap();
        for f in frames.iter().take(6) {
            println!("  t={:.3}s node {} {:?} {} B -> {} receivers", f.time, f.sender, f.kind, f.bytes, f.receivers);
        }
    }
}
