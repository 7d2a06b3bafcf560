//! Scenario description and the keyed scenario file.
//!
//! ```text
//! NAME=G1_20_128
//! AREA=600x400
//! VEHICLES=20
//! DURATION=180
//! CBR_RATE_KBPS=128
//! MOBILITY=grid            # or trace:<path> or static:x,y;x,y;...
//! ```
//!
//! Every other key is optional; see [`ScenarioSpec::from_keyed`] for the list.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::channel::ChannelSpec;
use super::mobility::{generate_grid, GridMobility, Trace};
use super::SimError;
use crate::keyed::{Keyed, KeyedError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySpec {
    pub tx_watts: f64,
    pub rx_watts: f64,
}

impl Default for EnergySpec {
    fn default() -> Self {
        Self {
            tx_watts: 1.8,
            rx_watts: 1.4,
        }
    }
}

/// Constant-bit-rate flows. Flow `k` starts at
/// `start_min + k * (start_max - start_min) / (sources - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CbrSpec {
    pub sources: usize,
    pub packet_bytes: u32,
    pub rate_kbps: f64,
    pub duration: f64,
    pub start_min: f64,
    pub start_max: f64,
    /// Explicit (source, destination) pairs; by default source `k` sends to
    /// vehicle `k + vehicles / 2`.
    pub pairs: Option<Vec<(usize, usize)>>,
}

impl CbrSpec {
    pub fn rate_bps(&self) -> f64 {
        self.rate_kbps * 1000.0
    }

    /// Seconds between two packets of one flow.
    pub fn interval(&self) -> f64 {
        f64::from(self.packet_bytes) * 8.0 / self.rate_bps()
    }

    /// Packets one flow emits; a trailing partial packet is not sent.
    pub fn packets_per_flow(&self) -> u64 {
        (self.duration * self.rate_bps() / (f64::from(self.packet_bytes) * 8.0)).floor() as u64
    }

    pub fn start_time(&self, flow: usize) -> f64 {
        if self.sources <= 1 {
            self.start_min
        } else {
            self.start_min
                + (self.start_max - self.start_min) * flow as f64 / (self.sources - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MobilitySpec {
    Grid {
        block: f64,
        speed_min: f64,
        speed_max: f64,
        seed: u64,
    },
    TraceFile(PathBuf),
    Static(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub vehicle_count: usize,
    pub mobility: MobilitySpec,
    pub sim_duration: f64,
    pub cbr: CbrSpec,
    pub channel: ChannelSpec,
    pub energy: EnergySpec,
}

/// One traffic flow after pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flow {
    pub source: usize,
    pub destination: usize,
    pub start: f64,
}

const KEYS: &[&str] = &[
    "NAME",
    "AREA",
    "VEHICLES",
    "DURATION",
    "MOBILITY",
    "MOBILITY_SEED",
    "BLOCK_SIZE",
    "SPEED_MIN",
    "SPEED_MAX",
    "CBR_SOURCES",
    "CBR_PACKET_BYTES",
    "CBR_RATE_KBPS",
    "CBR_DURATION",
    "CBR_START_MIN",
    "CBR_START_MAX",
    "CBR_PAIRS",
    "BANDWIDTH_BPS",
    "NOMINAL_RANGE",
    "NAKAGAMI_M",
    "PATH_LOSS_EXPONENT",
    "FADING",
    "FRAME_OVERHEAD_BYTES",
    "TX_WATTS",
    "RX_WATTS",
];

impl ScenarioSpec {
    /// Grid scenario with the default traffic layout: `vehicles / 2` flows
    /// of 512-byte packets for 30 s, staggered over `[10, duration - 40]`.
    pub fn grid(name: &str, width: f64, height: f64, vehicles: usize, rate_kbps: f64) -> Self {
        let duration = 180.0;
        let grid = GridMobility::default();
        Self {
            name: name.to_string(),
            width,
            height,
            vehicle_count: vehicles,
            mobility: MobilitySpec::Grid {
                block: grid.block,
                speed_min: grid.speed_min,
                speed_max: grid.speed_max,
                seed: grid.seed,
            },
            sim_duration: duration,
            cbr: CbrSpec {
                sources: vehicles / 2,
                packet_bytes: 512,
                rate_kbps,
                duration: 30.0,
                start_min: 10.0,
                start_max: duration - 40.0,
                pairs: None,
            },
            channel: ChannelSpec::default(),
            energy: EnergySpec::default(),
        }
    }

    /// Parked vehicles with explicit flows starting at t=0.
    pub fn stationary(
        name: &str,
        positions: &[[f64; 2]],
        pairs: &[(usize, usize)],
        rate_kbps: f64,
        cbr_duration: f64,
        sim_duration: f64,
    ) -> Self {
        let width = positions.iter().map(|p| p[0]).fold(1.0, f64::max);
        let height = positions.iter().map(|p| p[1]).fold(1.0, f64::max);
        Self {
            name: name.to_string(),
            width,
            height,
            vehicle_count: positions.len(),
            mobility: MobilitySpec::Static(positions.to_vec()),
            sim_duration,
            cbr: CbrSpec {
                sources: pairs.len(),
                packet_bytes: 512,
                rate_kbps,
                duration: cbr_duration,
                start_min: 0.0,
                start_max: 0.0,
                pairs: Some(pairs.to_vec()),
            },
            channel: ChannelSpec::default(),
            energy: EnergySpec::default(),
        }
    }

    pub fn flows(&self) -> Vec<Flow> {
        let half = self.vehicle_count / 2;
        (0..self.cbr.sources)
            .map(|k| {
                let (source, destination) = match &self.cbr.pairs {
                    Some(p) => p[k],
                    None => (k, k + half),
                };
                Flow {
                    source,
                    destination,
                    start: self.cbr.start_time(k),
                }
            })
            .collect()
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Scenario(m));
        if self.vehicle_count < 2 {
            return bad(format!("need at least 2 vehicles, got {}", self.vehicle_count));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad(format!("bad area {}x{}", self.width, self.height));
        }
        if !(self.sim_duration > 0.0) {
            return bad(format!("bad duration {}", self.sim_duration));
        }
        let c = &self.cbr;
        if c.sources > self.vehicle_count / 2 {
            return bad(format!(
                "{} CBR sources exceed half of {} vehicles",
                c.sources, self.vehicle_count
            ));
        }
        if c.packet_bytes == 0 || !(c.rate_kbps > 0.0) || !(c.duration >= 0.0) {
            return bad("CBR packet size, rate and duration must be positive".into());
        }
        if c.start_min < 0.0 || c.start_max < c.start_min {
            return bad(format!("bad CBR start window [{}, {}]", c.start_min, c.start_max));
        }
        if c.start_max + c.duration > self.sim_duration + 1e-9 {
            return bad(format!(
                "CBR traffic ends at {} after the {} s run",
                c.start_max + c.duration,
                self.sim_duration
            ));
        }
        if let Some(pairs) = &c.pairs {
            if pairs.len() != c.sources {
                return bad(format!("{} CBR pairs for {} sources", pairs.len(), c.sources));
            }
            for &(s, d) in pairs {
                if s == d {
                    return bad(format!("flow {s}->{d} sends to itself"));
                }
            }
        }
        for f in self.flows() {
            for id in [f.source, f.destination] {
                if id >= self.vehicle_count {
                    return Err(SimError::UnknownNode(id));
                }
            }
        }
        if let MobilitySpec::Static(p) = &self.mobility {
            if p.len() != self.vehicle_count {
                return bad(format!("{} positions for {} vehicles", p.len(), self.vehicle_count));
            }
        }
        self.channel.check().map_err(SimError::Scenario)?;
        if !(self.energy.tx_watts > 0.0 && self.energy.rx_watts > 0.0) {
            return bad("power draws must be positive".into());
        }
        Ok(())
    }

    /// Parses a keyed scenario file; relative trace paths resolve against `base_dir`.
    pub fn from_keyed(text: &str, base_dir: Option<&Path>) -> Result<Self, SimError> {
        let k = Keyed::parse(text)?;
        k.deny_unknown(KEYS)?;
        let area: String = k.require("AREA")?;
        let (width, height) = area
            .split_once(['x', 'X'])
            .and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)))
            .ok_or_else(|| Keyed::value_error("AREA", &area, "expected WIDTHxHEIGHT"))?;
        let vehicles: usize = k.require("VEHICLES")?;
        let rate: f64 = k.require("CBR_RATE_KBPS")?;
        let name = k.raw("NAME").unwrap_or("scenario");
        let mut s = Self::grid(name, width, height, vehicles, rate);

        if let Some(d) = k.get("DURATION")? {
            s.sim_duration = d;
            s.cbr.start_max = d - 40.0;
        }
        s.cbr.sources = k.get("CBR_SOURCES")?.unwrap_or(s.cbr.sources);
        s.cbr.packet_bytes = k.get("CBR_PACKET_BYTES")?.unwrap_or(s.cbr.packet_bytes);
        s.cbr.duration = k.get("CBR_DURATION")?.unwrap_or(s.cbr.duration);
        s.cbr.start_min = k.get("CBR_START_MIN")?.unwrap_or(s.cbr.start_min);
        s.cbr.start_max = k.get("CBR_START_MAX")?.unwrap_or(s.cbr.start_max);
        if let Some(raw) = k.raw("CBR_PAIRS") {
            s.cbr.pairs = Some(parse_pairs(raw)?);
        }

        let grid = GridMobility::default();
        let mobility = k.raw("MOBILITY").unwrap_or("grid");
        s.mobility = if mobility == "grid" {
            MobilitySpec::Grid {
                block: k.get("BLOCK_SIZE")?.unwrap_or(grid.block),
                speed_min: k.get("SPEED_MIN")?.unwrap_or(grid.speed_min),
                speed_max: k.get("SPEED_MAX")?.unwrap_or(grid.speed_max),
                seed: k.get("MOBILITY_SEED")?.unwrap_or(grid.seed),
            }
        } else if let Some(path) = mobility.strip_prefix("trace:") {
            let path = PathBuf::from(path.trim());
            MobilitySpec::TraceFile(match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path,
            })
        } else if let Some(list) = mobility.strip_prefix("static:") {
            MobilitySpec::Static(parse_points(list)?)
        } else {
            return Err(Keyed::value_error("MOBILITY", mobility, "expected grid, trace:<path> or static:<points>").into());
        };

        let ch = &mut s.channel;
        ch.bandwidth_bps = k.get("BANDWIDTH_BPS")?.unwrap_or(ch.bandwidth_bps);
        ch.nominal_range = k.get("NOMINAL_RANGE")?.unwrap_or(ch.nominal_range);
        ch.nakagami_m = k.get("NAKAGAMI_M")?.unwrap_or(ch.nakagami_m);
        ch.path_loss_exponent = k.get("PATH_LOSS_EXPONENT")?.unwrap_or(ch.path_loss_exponent);
        ch.frame_overhead_bytes = k.get("FRAME_OVERHEAD_BYTES")?.unwrap_or(ch.frame_overhead_bytes);
        if let Some(f) = k.raw("FADING") {
            ch.fading = parse_switch("FADING", f)?;
        }
        s.energy.tx_watts = k.get("TX_WATTS")?.unwrap_or(s.energy.tx_watts);
        s.energy.rx_watts = k.get("RX_WATTS")?.unwrap_or(s.energy.rx_watts);
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_keyed(&text, path.parent())
    }

    /// Keyed text that parses back to an equal spec.
    pub fn to_keyed(&self) -> String {
        let mut o = String::new();
        let c = &self.cbr;
        let _ = writeln!(o, "NAME={}", self.name);
        let _ = writeln!(o, "AREA={:?}x{:?}", self.width, self.height);
        let _ = writeln!(o, "VEHICLES={}", self.vehicle_count);
        let _ = writeln!(o, "DURATION={:?}", self.sim_duration);
        match &self.mobility {
            MobilitySpec::Grid {
                block,
                speed_min,
                speed_max,
                seed,
            } => {
                let _ = writeln!(o, "MOBILITY=grid");
                let _ = writeln!(o, "MOBILITY_SEED={seed}");
                let _ = writeln!(o, "BLOCK_SIZE={block:?}");
                let _ = writeln!(o, "SPEED_MIN={speed_min:?}");
                let _ = writeln!(o, "SPEED_MAX={speed_max:?}");
            }
            MobilitySpec::TraceFile(p) => {
                let _ = writeln!(o, "MOBILITY=trace:{}", p.display());
            }
            MobilitySpec::Static(points) => {
                let list: Vec<String> = points.iter().map(|p| format!("{:?},{:?}", p[0], p[1])).collect();
                let _ = writeln!(o, "MOBILITY=static:{}", list.join(";"));
            }
        }
        let _ = writeln!(o, "CBR_SOURCES={}", c.sources);
        let _ = writeln!(o, "CBR_PACKET_BYTES={}", c.packet_bytes);
        let _ = writeln!(o, "CBR_RATE_KBPS={:?}", c.rate_kbps);
        let _ = writeln!(o, "CBR_DURATION={:?}", c.duration);
        let _ = writeln!(o, "CBR_START_MIN={:?}", c.start_min);
        let _ = writeln!(o, "CBR_START_MAX={:?}", c.start_max);
        if let Some(pairs) = &c.pairs {
            let list: Vec<String> = pairs.iter().map(|(s, d)| format!("{s}-{d}")).collect();
            let _ = writeln!(o, "CBR_PAIRS={}", list.join(";"));
        }
        let ch = &self.channel;
        let _ = writeln!(o, "BANDWIDTH_BPS={:?}", ch.bandwidth_bps);
        let _ = writeln!(o, "NOMINAL_RANGE={:?}", ch.nominal_range);
        let _ = writeln!(o, "NAKAGAMI_M={:?}", ch.nakagami_m);
        let _ = writeln!(o, "PATH_LOSS_EXPONENT={:?}", ch.path_loss_exponent);
        let _ = writeln!(o, "FADING={}", if ch.fading { "on" } else { "off" });
        let _ = writeln!(o, "FRAME_OVERHEAD_BYTES={}", ch.frame_overhead_bytes);
        let _ = writeln!(o, "TX_WATTS={:?}", self.energy.tx_watts);
        let _ = writeln!(o, "RX_WATTS={:?}", self.energy.rx_watts);
        o
    }
}

fn parse_switch(key: &str, v: &str) -> Result<bool, KeyedError> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Keyed::value_error(key, v, "expected on/off")),
    }
}

fn parse_pairs(raw: &str) -> Result<Vec<(usize, usize)>, KeyedError> {
    raw.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            p.split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Keyed::value_error("CBR_PAIRS", p, "expected SRC-DST"))
        })
        .collect()
}

fn parse_points(raw: &str) -> Result<Vec<[f64; 2]>, KeyedError> {
    raw.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            p.split_once(',')
                .and_then(|(a, b)| Some([a.trim().parse().ok()?, b.trim().parse().ok()?]))
                .ok_or_else(|| Keyed::value_error("MOBILITY", p, "expected x,y"))
        })
        .collect()
}

/// A checked scenario with its mobility resolved to a trace.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub trace: Arc<Trace>,
    pub flows: Vec<Flow>,
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self, SimError> {
        spec.check()?;
        let trace = match &spec.mobility {
            MobilitySpec::Grid {
                block,
                speed_min,
                speed_max,
                seed,
            } => generate_grid(
                &GridMobility {
                    block: *block,
                    speed_min: *speed_min,
                    speed_max: *speed_max,
                    seed: *seed,
                },
                spec.width,
                spec.height,
                spec.vehicle_count,
                spec.sim_duration,
            ),
            MobilitySpec::TraceFile(path) => Trace::load(path)?,
            MobilitySpec::Static(points) => {
                Trace::stationary(spec.width, spec.height, spec.sim_duration, points)
            }
        };
        Self::with_trace(spec, trace)
    }

    /// Binds a spec to an already loaded trace.
    pub fn with_trace(spec: ScenarioSpec, trace: Trace) -> Result<Self, SimError> {
        spec.check()?;
        trace.check(spec.sim_duration)?;
        if trace.node_count() < spec.vehicle_count {
            return Err(SimError::UnknownNode(trace.node_count()));
        }
        let flows = spec.flows();
        Ok(Self {
            spec,
            trace: Arc::new(trace),
            flows,
        })
    }

    pub fn node_count(&self) -> usize {
        self.spec.vehicle_count
    }

    /// Stable hash of the scenario text, used to key caches and manifests.
    pub fn fingerprint(&self) -> u64 {
        let text = self.spec.to_keyed();
        let words: Vec<u64> = text.bytes().map(u64::from).collect();
        crate::rng::mix(0x5CE7_A210, &words)
    }
}
