use aodv_tune::param_space::{gene, reference_tuned, ParamSpace};
use aodv_tune::sim::{
    reception_probability, simulate, simulate_detailed, AodvConfig, ChannelSpec, FrameKind,
    FrameRecord, Scenario, ScenarioSpec, SimOptions, Trace,
};

fn lossless(mut spec: ScenarioSpec) -> Scenario {
    spec.channel.fading = false;
    Scenario::new(spec).unwrap()
}

/// Energy recomputed from the frame log alone.
fn replay_energy(frames: &[FrameRecord], spec: &ScenarioSpec) -> f64 {
    frames
        .iter()
        .map(|f| {
            let air = f.bytes as f64 * 8.0 / spec.channel.bandwidth_bps;
            air * spec.energy.tx_watts + f.receivers as f64 * air * spec.energy.rx_watts
        })
        .sum()
}

#[test]
fn single_hop_delivers_every_packet() {
    let sc = lossless(ScenarioSpec::stationary(
        "pair",
        &[[0.0, 0.0], [50.0, 0.0]],
        &[(0, 1)],
        128.0,
        30.0,
        40.0,
    ));
    let out = simulate(&AodvConfig::rfc(), &sc, 1);
    assert_eq!(out.data_packets_sent, 937);
    assert_eq!(out.data_packets_delivered, 937);
    assert_eq!(out.pdr, 1.0);
    assert_eq!(out.route_discoveries_failed, 0);
    assert!(out.rrep_count >= 1);
}

#[test]
fn disconnected_pair_only_spends_control_energy() {
    let sc = lossless(ScenarioSpec::stationary(
        "apart",
        &[[0.0, 0.0], [1000.0, 0.0]],
        &[(0, 1)],
        128.0,
        30.0,
        40.0,
    ));
    let run = simulate_detailed(&AodvConfig::rfc(), &sc, 1, SimOptions { record_frames: true });
    let out = &run.outcome;
    assert_eq!(out.pdr, 0.0);
    assert_eq!(out.data_packets_delivered, 0);
    assert!(out.route_discoveries_failed >= 1);
    assert!(out.energy_joules > 0.0);
    let frames = run.frames.unwrap();
    assert!(frames.iter().all(|f| matches!(f.kind, FrameKind::Hello | FrameKind::Rreq)));
}

#[test]
fn three_node_chain_discovers_through_the_relay() {
    let sc = lossless(ScenarioSpec::stationary(
        "chain",
        &[[0.0, 0.0], [200.0, 0.0], [400.0, 0.0]],
        &[(0, 2)],
        128.0,
        30.0,
        40.0,
    ));
    let run = simulate_detailed(&AodvConfig::rfc(), &sc, 3, SimOptions::default());
    let out = &run.outcome;
    assert_eq!(out.pdr, 1.0, "{out:?}");
    assert!(out.rrep_count >= 1);
    assert_eq!(run.discoveries_succeeded, 1);
    // TTL 1 cannot reach C, so at least two floods were needed.
    assert!(out.rreq_count >= 2);
}

#[test]
fn energy_matches_frame_log_replay() {
    let spec = ScenarioSpec::grid("g", 600.0, 400.0, 20, 256.0);
    let sc = Scenario::new(spec.clone()).unwrap();
    let space = ParamSpace::aodv();
    for (genome, seed) in [(space.rfc_default(), 5), (reference_tuned(), 6)] {
        let cfg = AodvConfig::from_genome(&genome, &space).unwrap();
        let run = simulate_detailed(&cfg, &sc, seed, SimOptions { record_frames: true });
        let replay = replay_energy(run.frames.as_ref().unwrap(), &spec);
        let e = run.outcome.energy_joules;
        assert!(e > 0.0);
        assert!((e - replay).abs() <= 1e-9 * replay, "{e} vs {replay}");
        let per_node: f64 = run.energy_per_node.iter().sum();
        assert!((per_node - e).abs() <= 1e-9 * e);
    }
}

#[test]
fn conservation_and_determinism_on_grid() {
    let sc = Scenario::new(ScenarioSpec::grid("g", 600.0, 600.0, 30, 512.0)).unwrap();
    let cfg = AodvConfig::rfc();
    for seed in 0..4 {
        let a = simulate_detailed(&cfg, &sc, seed, SimOptions::default());
        let b = simulate(&cfg, &sc, seed);
        assert_eq!(a.outcome, b);
        assert!(b.data_packets_delivered <= b.data_packets_sent);
        assert!((0.0..=1.0).contains(&b.pdr));
        if b.data_packets_delivered > 0 {
            assert!(a.discoveries_succeeded >= 1);
        }
        assert_eq!(b.data_packets_sent, 15 * 3750);
    }
    assert_ne!(simulate(&cfg, &sc, 0), simulate(&cfg, &sc, 1));
}

#[test]
fn hello_count_tracks_interval_under_continuous_traffic() {
    // Every source has traffic for the whole run.
    let mut spec = ScenarioSpec::grid("busy", 600.0, 400.0, 20, 128.0);
    spec.cbr.start_min = 0.0;
    spec.cbr.start_max = 0.0;
    spec.cbr.duration = spec.sim_duration;
    let sc = Scenario::new(spec.clone()).unwrap();
    let space = ParamSpace::aodv();
    for genome in [space.rfc_default(), reference_tuned()] {
        let cfg = AodvConfig::from_genome(&genome, &space).unwrap();
        let run = simulate_detailed(&cfg, &sc, 11, SimOptions::default());
        let expected = (spec.sim_duration / genome.0[gene::HELLO_INTERVAL]).floor();
        for f in &sc.flows {
            let got = run.hello_per_node[f.source] as f64;
            assert!((got - expected).abs() <= 1.0, "node {}: {got} vs {expected}", f.source);
        }
    }
}

#[test]
fn fully_connected_static_pair_with_fading_off() {
    let positions: Vec<[f64; 2]> = (0..6).map(|i| [i as f64 * 20.0, 0.0]).collect();
    let sc = lossless(ScenarioSpec::stationary("clique", &positions, &[(0, 5)], 512.0, 30.0, 35.0));
    let out = simulate(&AodvConfig::rfc(), &sc, 9);
    assert_eq!(out.pdr, 1.0);
}

#[test]
fn reception_frequency_matches_probability() {
    use rand::{Rng, SeedableRng};
    let ch = ChannelSpec::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let trials = 100_000;
    for d in [100.0, 250.0, 330.0] {
        let p = reception_probability(d, &ch);
        let hits = (0..trials).filter(|_| rng.random::<f64>() < p).count();
        let freq = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma, "d={d}: {freq} vs {p}");
    }
}

#[test]
fn trace_file_scenarios_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.trace");
    Trace::stationary(100.0, 10.0, 40.0, &[[0.0, 0.0], [50.0, 0.0]])
        .write(&path)
        .unwrap();
    let scenario_text = format!(
        "AREA=100x10\nVEHICLES=2\nDURATION=40\nCBR_RATE_KBPS=128\nCBR_SOURCES=1\nCBR_START_MIN=0\nCBR_START_MAX=0\nFADING=off\nMOBILITY=trace:{}\n",
        path.file_name().unwrap().to_str().unwrap()
    );
    let spec = ScenarioSpec::from_keyed(&scenario_text, Some(dir.path())).unwrap();
    let out = simulate(&AodvConfig::rfc(), &Scenario::new(spec).unwrap(), 0);
    assert_eq!(out.data_packets_sent, 937);
    assert_eq!(out.pdr, 1.0);
}
