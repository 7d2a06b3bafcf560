//! The tuned AODV parameters and the expanding-ring schedule derived from them.

use serde::Serialize;

use crate::param_space::{gene, Genome, ParamSpace, Violation};

/// Typed view of a valid genome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AodvConfig {
    pub hello_interval: f64,
    pub active_route_timeout: f64,
    pub my_route_timeout: f64,
    pub node_traversal_time: f64,
    pub max_rreq_timeout: f64,
    pub net_diameter: u32,
    pub allowed_hello_loss: u32,
    pub rreq_retries: u32,
    pub ttl_start: u32,
    pub ttl_increment: u32,
    pub ttl_threshold: u32,
}

impl AodvConfig {
    pub fn rfc() -> Self {
        Self::from_genome(&ParamSpace::aodv().rfc_default(), &ParamSpace::aodv())
            .expect("RFC defaults are valid")
    }

    pub fn from_genome(g: &Genome, space: &ParamSpace) -> Result<Self, Vec<Violation>> {
        let violations = space.validate(g);
        if !violations.is_empty() {
            return Err(violations);
        }
        let v = g.values();
        let count = |i: usize| v[i] as u32;
        Ok(Self {
            hello_interval: v[gene::HELLO_INTERVAL],
            active_route_timeout: v[gene::ACTIVE_ROUTE_TIMEOUT],
            my_route_timeout: v[gene::MY_ROUTE_TIMEOUT],
            node_traversal_time: v[gene::NODE_TRAVERSAL_TIME],
            max_rreq_timeout: v[gene::MAX_RREQ_TIMEOUT],
            net_diameter: count(gene::NET_DIAMETER),
            allowed_hello_loss: count(gene::ALLOWED_HELLO_LOSS),
            rreq_retries: count(gene::REQ_RETRIES),
            ttl_start: count(gene::TTL_START),
            ttl_increment: count(gene::TTL_INCREMENT),
            ttl_threshold: count(gene::TTL_THRESHOLD),
        })
    }

    /// Silence after which a neighbour is considered gone.
    pub fn link_loss_timeout(&self) -> f64 {
        f64::from(self.allowed_hello_loss) * self.hello_interval
    }
}

/// TTLs of successive RREQ floods for one discovery: `TTL_START`, then
/// `+TTL_INCREMENT` while not above `TTL_THRESHOLD`, then `NET_DIAMETER`
/// repeated `1 + RREQ_RETRIES` times.
pub fn ring_ttl_sequence(cfg: &AodvConfig) -> Vec<u32> {
    let mut out = Vec::new();
    let mut ttl = cfg.ttl_start;
    while ttl <= cfg.ttl_threshold {
        out.push(ttl);
        ttl += cfg.ttl_increment;
    }
    out.extend(std::iter::repeat_n(cfg.net_diameter, 1 + cfg.rreq_retries as usize));
    out
}

/// Wait for a reply to a ring of `ttl` hops, capped by `MAX_RREQ_TIMEOUT`.
pub fn ring_timeout(ttl: u32, cfg: &AodvConfig) -> f64 {
    debug_assert!(ttl >= 1);
    (2.0 * cfg.node_traversal_time * (f64::from(ttl) + 2.0)).min(cfg.max_rreq_timeout)
}
