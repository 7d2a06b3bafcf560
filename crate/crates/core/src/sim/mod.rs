//! Desk-scale discrete-event VANET simulator.
//!
//! Vehicles follow a trace, exchange CBR traffic routed by a compact AODV
//! (HELLO liveness, expanding-ring RREQ, unicast RREP, RERR on link loss),
//! and lose frames only through Nakagami-m fading. Energy is charged for
//! transmit and receive airtime; idle power is not modelled, nor are MAC
//! contention and collisions.

pub mod aodv;
pub mod channel;
mod engine;
pub mod mobility;
pub mod scenario;

use serde::{Deserialize, Serialize};

pub use aodv::{ring_timeout, ring_ttl_sequence, AodvConfig};
pub use channel::{packet_airtime, reception_probability, ChannelSpec};
pub use mobility::{generate_grid, GridMobility, Sample, Trace, TraceError};
pub use scenario::{CbrSpec, EnergySpec, Flow, MobilitySpec, Scenario, ScenarioSpec};

use crate::keyed::KeyedError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("traffic references unknown node {0}")]
    UnknownNode(usize),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Keyed(#[from] KeyedError),
}

/// Totals of one replication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub energy_joules: f64,
    pub data_packets_sent: u64,
    pub data_packets_delivered: u64,
    pub pdr: f64,
    pub hello_count: u64,
    pub rreq_count: u64,
    pub rrep_count: u64,
    pub rerr_count: u64,
    pub route_discoveries_failed: u64,
}

impl SimOutcome {
    pub const CSV_HEADER: &'static str = "energy_joules,data_packets_sent,data_packets_delivered,pdr,hello_count,rreq_count,rrep_count,rerr_count,route_discoveries_failed";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{:?},{},{},{:?},{},{},{},{},{}",
            self.energy_joules,
            self.data_packets_sent,
            self.data_packets_delivered,
            self.pdr,
            self.hello_count,
            self.rreq_count,
            self.rrep_count,
            self.rerr_count,
            self.route_discoveries_failed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    Hello,
    Rreq,
    Rrep,
    Rerr,
    Data,
}

impl FrameKind {
    /// AODV message sizes before link/network headers.
    pub fn payload_bytes(self, data_bytes: u32) -> u32 {
        match self {
            FrameKind::Hello => 20,
            FrameKind::Rreq => 24,
            FrameKind::Rrep => 20,
            FrameKind::Rerr => 12,
            FrameKind::Data => data_bytes,
        }
    }
}

/// One transmission, as logged for energy audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameRecord {
    pub time: f64,
    pub sender: usize,
    pub kind: FrameKind,
    pub bytes: u32,
    pub receivers: u32,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub record_frames: bool,
}

/// Outcome plus per-node diagnostics.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub outcome: SimOutcome,
    pub hello_per_node: Vec<u64>,
    pub energy_per_node: Vec<f64>,
    pub discoveries_succeeded: u64,
    pub frames: Option<Vec<FrameRecord>>,
}

pub fn simulate(cfg: &AodvConfig, scenario: &Scenario, seed: u64) -> SimOutcome {
    simulate_detailed(cfg, scenario, seed, SimOptions::default()).outcome
}

pub fn simulate_detailed(
    cfg: &AodvConfig,
    scenario: &Scenario,
    seed: u64,
    options: SimOptions,
) -> SimRun {
    engine::Engine::new(cfg, scenario, seed, options).run()
}

/// Prepares the scenario then simulates; convenient for one-off runs.
pub fn simulate_spec(
    cfg: &AodvConfig,
    spec: &ScenarioSpec,
    seed: u64,
) -> Result<SimOutcome, SimError> {
    Ok(simulate(cfg, &Scenario::new(spec.clone())?, seed))
}
