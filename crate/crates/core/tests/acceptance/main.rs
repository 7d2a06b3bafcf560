//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test --test acceptance`.

use std::convert::Infallible;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aodv_tune::campaign::{builtin_scenario, cmd_optimize, CampaignConfig, Mode};
use aodv_tune::de::{
    binomial_crossover, blend_raw, differential_mutant, initialize_population, run, select,
    subspace_fraction, DEConfig, EvalContext,
};
use aodv_tune::fitness::{
    evaluate_metrics, fitness, penalized_fitness, FitnessReport, FitnessWeights, ReferenceValues,
};
use aodv_tune::param_space::{gene, reference_tuned, Genome, ParamSpace, GENE_COUNT};
use aodv_tune::rng::splitmix64;
use aodv_tune::sim::{
    reception_probability, ring_ttl_sequence, simulate, simulate_detailed, AodvConfig, ChannelSpec,
    Scenario, ScenarioSpec, SimOptions,
};
use aodv_tune::stats::{chi2_sf, kruskal_wallis, ks_normality, SampleSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{what}: got {got}, want {want} (tol {tol})"))
}

fn fitness_arithmetic() -> Outcome {
    let e_rfc = 27851.4;
    let refs = ReferenceValues::new(e_rfc, 0.7756).unwrap();
    let w = FitnessWeights::default();
    let f = |e, p| fitness(e, p, &refs, &w).unwrap();
    close(f(e_rfc, 0.7756), 0.92244, 1e-12, "F(E_rfc, 0.7756)")?;
    close(f(0.0, 1.0), 0.0, 1e-12, "F(0, 1)")?;
    close(f(0.5 * e_rfc, 0.7756), 0.47244, 1e-12, "F(E_rfc/2, 0.7756)")?;

    let floor = w.pdr_floor(&refs);
    close(floor, 0.65926, 1e-12, "PDR floor")?;
    let at_floor = evaluate_metrics(e_rfc, floor, &refs, &w).unwrap();
    ensure(!at_floor.1, || "penalty applied at the floor".into())?;
    close(at_floor.0, f(e_rfc, floor), 0.0, "value at the floor")?;
    close(penalized_fitness(e_rfc, floor, &refs, &w).unwrap(), f(e_rfc, floor), 1e-12, "continuity")?;
    let zero = evaluate_metrics(e_rfc, 0.0, &refs, &w).unwrap();
    ensure(zero.1, || "PDR 0 not penalized".into())?;
    close(zero.0, 1.65926, 1e-12, "F_P(E_rfc, 0)")?;
    Ok("0.92244, 0.0, 0.47244, 1.65926 and boundary continuity".into())
}

fn de_operators() -> Outcome {
    let space = ParamSpace::aodv();
    let mut v = [space.rfc_default(); 3];
    v[0].0[gene::MAX_RREQ_TIMEOUT] = 10.0;
    v[1].0[gene::MAX_RREQ_TIMEOUT] = 4.0;
    v[2].0[gene::MAX_RREQ_TIMEOUT] = 2.0;
    let m = differential_mutant(&v[0], &v[1], &v[2], 0.5, &space);
    close(m.0[gene::MAX_RREQ_TIMEOUT], 11.0, 0.0, "10 + 0.5 (4 - 2)")?;
    ensure(differential_mutant(&v[0], &v[1], &v[1], 0.5, &space) == v[0], || "r2 == r3".into())?;
    ensure(differential_mutant(&v[0], &v[1], &v[2], 0.0, &space) == v[0], || "mu = 0".into())?;

    let target = space.rfc_default();
    let mutant = reference_tuned();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        ensure(binomial_crossover(&target, &mutant, 1.0, &space, &mut rng) == mutant, || "C = 1".into())?;
        let u = binomial_crossover(&target, &mutant, 0.0, &space, &mut rng);
        let diff: Vec<usize> = (0..GENE_COUNT).filter(|&j| u.0[j] != target.0[j]).collect();
        ensure(diff.len() == 1 && u.0[diff[0]] == mutant.0[diff[0]], || format!("C = 0 changed {diff:?}"))?;
    }

    let mut violations = 0;
    let trials = 100_000;
    for _ in 0..trials {
        let x = Genome(std::array::from_fn(|i| {
            space.gene(i).lower + rng.random::<f64>() * space.gene(i).width()
        }));
        let y = Genome(std::array::from_fn(|i| {
            space.gene(i).lower + rng.random::<f64>() * space.gene(i).width()
        }));
        let alpha = 0.2;
        let (a, b) = blend_raw(&x, &y, alpha, &mut rng);
        for j in 0..GENE_COUNT {
            let (lo, hi) = (x.0[j].min(y.0[j]), x.0[j].max(y.0[j]));
            let l = hi - lo;
            for c in [a[j], b[j]] {
                if c < lo - l * alpha || c > hi + l * alpha {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} BLX bound violations"))?;

    let (t, u) = (space.rfc_default(), reference_tuned());
    ensure(select(&t, &u, 0.5, 0.5).unwrap() == &u, || "tie did not go to trial".into())?;
    ensure(select(&t, &u, 0.5, 0.3).unwrap() == &u, || "better trial rejected".into())?;
    ensure(select(&t, &u, 0.5, 0.9).unwrap() == &t, || "worse trial accepted".into())?;
    Ok(format!("mutation, crossover extremes, {trials} BLX trials with 0 violations, tie to trial"))
}

fn initializer_bands() -> Outcome {
    let space = ParamSpace::aodv();
    for seed in 0..100 {
        for (p, g) in initialize_population(&space, 8, seed).iter().enumerate() {
            for i in 0..GENE_COUNT {
                let s = space.gene(i);
                let f = subspace_fraction(g.0[i], s.rfc_default, s);
                ensure(f >= p as f64 / 8.0 && f < (p + 1) as f64 / 8.0, || {
                    format!("seed {seed}, individual {p}, gene {}: fraction {f}", s.name)
                })?;
            }
        }
    }
    Ok("100 seeds x 8 individuals x 11 genes in band".into())
}

fn sphere(g: &Genome, _: EvalContext) -> Result<FitnessReport, Infallible> {
    let space = ParamSpace::aodv();
    Ok(FitnessReport::from_value(
        (0..GENE_COUNT)
            .map(|i| {
                let s = space.gene(i);
                ((g.0[i] - (s.lower + 0.3 * s.width())) / s.width()).powi(2)
            })
            .sum(),
    ))
}

fn elitist_monotonicity() -> Outcome {
    let space = ParamSpace::aodv();
    let mut strict = 0;
    for seed in 0..20 {
        let cfg = DEConfig {
            base_seed: seed,
            ..DEConfig::default()
        };
        let r = run(&space, &cfg, &sphere).map_err(|e| e.to_string())?;
        ensure(r.log.len() == 51, || format!("log length {}", r.log.len()))?;
        for w in r.log.windows(2) {
            ensure(w[1].best_fitness <= w[0].best_fitness, || {
                format!("seed {seed}: best rose at generation {}", w[1].generation)
            })?;
        }
        if r.log[50].best_fitness < r.log[0].best_fitness {
            strict += 1;
        }
    }
    ensure(strict >= 19, || format!("only {strict}/20 runs improved"))?;
    Ok(format!("20 runs non-increasing, {strict}/20 strictly improved"))
}

fn artifact_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for parallelism in [1, 8] {
        let dir = tmp.path().join(format!("p{parallelism}"));
        let mut cfg = CampaignConfig::new(
            Mode::Optimize,
            vec![builtin_scenario("g1_20_128").unwrap()],
            2024,
            &dir,
        );
        cfg.de.generations = 2;
        cfg.eval.replications = 8;
        cfg.eval.parallelism = parallelism;
        let out = cmd_optimize(&cfg).map_err(|e| e.to_string())?;
        let mut files: Vec<String> = out.artifacts.iter().map(|a| a.path.clone()).collect();
        files.push("manifest.json".into());
        bytes.push(
            files
                .iter()
                .map(|f| (f.clone(), fs::read(dir.join(f)).unwrap()))
                .collect::<Vec<_>>(),
        );
    }
    ensure(bytes[0] == bytes[1], || "artifacts differ between parallelism 1 and 8".into())?;
    Ok(format!("{} artifacts byte-identical", bytes[0].len()))
}

/// Fraction of Gamma(m, 1/m) fading draws that clear the path loss at `x`.
fn fading_frequency(m: u32, x: f64, draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let hits = (0..draws)
        .filter(|_| {
            let power: f64 = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).sum::<f64>() / m as f64;
            power >= x
        })
        .count();
    hits as f64 / draws as f64
}

fn channel_closed_forms() -> Outcome {
    let ch = |m: f64| ChannelSpec {
        nakagami_m: m,
        ..ChannelSpec::default()
    };
    let r = ChannelSpec::default().nominal_range;
    close(reception_probability(r, &ch(1.0)), (-1.0f64).exp(), 1e-9, "m=1, x=1")?;
    close(reception_probability(r, &ch(3.0)), 8.5 * (-3.0f64).exp(), 1e-9, "m=3, x=1")?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 100_000;
    for m in [1u32, 3] {
        for d in [0.5 * r, r, 1.3 * r] {
            let spec = ch(m as f64);
            let p = reception_probability(d, &spec);
            let x = (d / r).powf(spec.path_loss_exponent);
            let freq = fading_frequency(m, x, draws, &mut rng);
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            ensure((freq - p).abs() <= 3.0 * sigma, || {
                format!("m={m}, d={d}: frequency {freq} vs {p} (3 sigma {})", 3.0 * sigma)
            })?;
        }
    }
    Ok("e^-1 and 8.5e^-3 to 1e-9; fading frequencies within 3 sigma".into())
}

fn simulator_oracles() -> Outcome {
    let mut spec = ScenarioSpec::stationary("pair", &[[0.0, 0.0], [50.0, 0.0]], &[(0, 1)], 128.0, 30.0, 40.0);
    spec.channel.fading = false;
    let sc = Scenario::new(spec).map_err(|e| e.to_string())?;
    let out = simulate(&AodvConfig::rfc(), &sc, 1);
    ensure(out.data_packets_sent == 937 && out.data_packets_delivered == 937 && out.pdr == 1.0, || {
        format!("single hop: {out:?}")
    })?;

    let ring = ring_ttl_sequence(&AodvConfig::rfc());
    ensure(ring == vec![1, 3, 5, 7, 35, 35, 35], || format!("ring sequence {ring:?}"))?;

    let spec = ScenarioSpec::grid("g1_20_256", 600.0, 400.0, 20, 256.0);
    let sc = Scenario::new(spec.clone()).map_err(|e| e.to_string())?;
    let space = ParamSpace::aodv();
    let mut worst: f64 = 0.0;
    for (g, seed) in [(space.rfc_default(), 3), (reference_tuned(), 4)] {
        let cfg = AodvConfig::from_genome(&g, &space).unwrap();
        let run = simulate_detailed(&cfg, &sc, seed, SimOptions { record_frames: true });
        let replay: f64 = run
            .frames
            .unwrap()
            .iter()
            .map(|f| {
                let air = f.bytes as f64 * 8.0 / spec.channel.bandwidth_bps;
                air * (spec.energy.tx_watts + f.receivers as f64 * spec.energy.rx_watts)
            })
            .sum();
        let rel = (run.outcome.energy_joules - replay).abs() / replay;
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-9, || format!("energy replay relative error {worst}"))?;
    Ok(format!("937/937 delivered, ring sequence, replay error {worst:.1e}"))
}

fn hello_load_direction() -> Outcome {
    let mut spec = ScenarioSpec::grid("g1_20_128_continuous", 600.0, 400.0, 20, 128.0);
    spec.cbr.start_min = 0.0;
    spec.cbr.start_max = 0.0;
    spec.cbr.duration = spec.sim_duration;
    let sc = Scenario::new(spec).map_err(|e| e.to_string())?;
    let space = ParamSpace::aodv();
    let rfc = AodvConfig::from_genome(&space.rfc_default(), &space).unwrap();
    let tuned = AodvConfig::from_genome(&reference_tuned(), &space).unwrap();
    let target = 1.0 / 11.994;
    let mut lower = 0;
    let mut ratios = Vec::new();
    for r in 0..24u64 {
        let a = simulate_detailed(&rfc, &sc, r, SimOptions::default());
        let b = simulate_detailed(&tuned, &sc, r, SimOptions::default());
        for f in &sc.flows {
            let (ha, hb) = (a.hello_per_node[f.source], b.hello_per_node[f.source]);
            ensure(ha > 0, || format!("replication {r}: node {} sent no HELLO", f.source))?;
            ratios.push(hb as f64 / ha as f64);
        }
        if b.outcome.energy_joules < a.outcome.energy_joules {
            lower += 1;
        }
    }
    let ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ensure((ratio / target - 1.0).abs() <= 0.10, || format!("hello ratio {ratio} vs {target}"))?;
    ensure(lower >= 20, || format!("tuned energy lower in only {lower}/24"))?;
    Ok(format!("hello ratio {ratio:.5} (target {target:.5}), energy lower in {lower}/24"))
}

fn statistics() -> Outcome {
    let kw = kruskal_wallis(&[
        SampleSet::new("a", vec![1.0, 2.0, 3.0]),
        SampleSet::new("b", vec![4.0, 5.0, 6.0]),
    ])
    .map_err(|e| e.to_string())?;
    close(kw.statistic, 3.857, 0.001, "Kruskal-Wallis H")?;

    let uniform: Vec<f64> = (0..1000u64)
        .map(|i| (splitmix64(2024 + i) >> 11) as f64 * 2f64.powi(-53))
        .collect();
    let ks_u = ks_normality(&SampleSet::new("uniform", uniform)).map_err(|e| e.to_string())?;
    ensure(ks_u.reject_at_95, || format!("uniform accepted, p = {}", ks_u.p_value))?;

    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::new(0.0, 1.0).unwrap();
    let q: Vec<f64> = (1..=100).map(|i| n.inverse_cdf((i as f64 - 0.5) / 100.0)).collect();
    let ks_q = ks_normality(&SampleSet::new("quantiles", q)).map_err(|e| e.to_string())?;
    ensure(!ks_q.reject_at_95, || format!("normal quantiles rejected, p = {}", ks_q.p_value))?;

    // Closed forms: df 2 is e^{-x/2}; df 4 is e^{-x/2}(1 + x/2).
    let mut worst: f64 = 0.0;
    for &x in &[0.1, 1.0, 3.857, 10.0, 30.0] {
        let h = (-x / 2.0f64).exp();
        worst = worst.max((chi2_sf(x, 2.0) - h).abs());
        worst = worst.max((chi2_sf(x, 4.0) - h * (1.0 + x / 2.0)).abs());
    }
    ensure(worst <= 1e-10, || format!("chi-square tail error {worst}"))?;
    Ok(format!(
        "H = {:.4}, uniform p = {:.1e}, quantiles p = {:.3}, chi-square error {worst:.1e}",
        kw.statistic, ks_u.p_value, ks_q.p_value
    ))
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = CampaignConfig::new(
        Mode::Optimize,
        vec![builtin_scenario("g1_20_128").unwrap()],
        7,
        tmp.path(),
    );
    cfg.de.pop_size = 8;
    cfg.de.generations = 10;
    cfg.eval.replications = 8;
    let out = cmd_optimize(&cfg).map_err(|e| e.to_string())?;
    for f in [
        "best_genome.txt",
        "best_genome.csv",
        "generations.csv",
        "best_report.json",
        "baseline.json",
        "manifest.json",
    ] {
        ensure(tmp.path().join(f).is_file(), || format!("missing {f}"))?;
    }
    let best = out.result.best_report.fitness;
    let rfc = out.rfc_report.fitness;
    ensure(best <= rfc, || format!("winner {best} worse than RFC {rfc}"))?;
    Ok(format!(
        "winner {best:.4} <= RFC {rfc:.4}, {} simulator runs",
        out.simulator_replications
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("fitness arithmetic", Duration::from_secs(1), fitness_arithmetic),
        ("DE operator suite", Duration::from_secs(10), de_operators),
        ("initializer subspace guarantee", Duration::from_secs(5), initializer_bands),
        ("elitist monotonicity", Duration::from_secs(30), elitist_monotonicity),
        ("determinism under parallelism", Duration::from_secs(120), artifact_determinism),
        ("channel closed forms", Duration::from_secs(10), channel_closed_forms),
        ("simulator oracles", Duration::from_secs(30), simulator_oracles),
        ("hello-load direction", Duration::from_secs(300), hello_load_direction),
        ("statistics", Duration::from_secs(5), statistics),
        ("end-to-end smoke", Duration::from_secs(300), end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let verdict = match result {
            Ok(detail) if took <= *budget => Ok(detail),
            Ok(detail) => Err(format!("{detail}; took {took:.1?}, budget {budget:?}")),
            Err(e) => Err(e),
        };
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name} ({took:.2?}): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.2?}): {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
