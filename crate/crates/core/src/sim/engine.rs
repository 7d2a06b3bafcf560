use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::aodv::{ring_timeout, ring_ttl_sequence, AodvConfig};
use super::channel::reception_probability;
use super::scenario::Scenario;
use super::{FrameKind, FrameRecord, SimOptions, SimOutcome, SimRun};
use crate::rng::{self, Purpose};

/// Packets queued per destination while a route is being discovered.
const BUFFER_LIMIT: usize = 64;
/// Upper bound of the random delay before an RREQ is rebroadcast.
const RREQ_JITTER: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
struct Route {
    next_hop: usize,
    hops: u32,
    expires: f64,
    /// Carries data (or a reply towards data); such routes keep HELLOs going.
    active: bool,
}

#[derive(Debug, Clone, Copy)]
struct Discovery {
    attempt: usize,
    token: u64,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    origin: usize,
    dest: usize,
    hops: u32,
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    Hello,
    Rreq {
        origin: usize,
        id: u32,
        dest: usize,
        ttl: u32,
        hops: u32,
    },
    Rrep {
        origin: usize,
        dest: usize,
        hops: u32,
        lifetime: f64,
    },
    Rerr {
        dest: usize,
    },
    Data(Packet),
}

impl Payload {
    fn kind(&self) -> FrameKind {
        match self {
            Payload::Hello => FrameKind::Hello,
            Payload::Rreq { .. } => FrameKind::Rreq,
            Payload::Rrep { .. } => FrameKind::Rrep,
            Payload::Rerr { .. } => FrameKind::Rerr,
            Payload::Data(_) => FrameKind::Data,
        }
    }
}

#[derive(Debug)]
enum Event {
    HelloTick,
    CbrEmit { flow: usize, k: u64 },
    Receive { from: usize, payload: Payload },
    RingTimeout { dest: usize, token: u64 },
    Rebroadcast { payload: Payload },
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    node: usize,
    seq: u64,
    event: Event,
}

impl Ord for Scheduled {
    // BinaryHeap is a max-heap; invert so the earliest (time, node, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.node.cmp(&self.node))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

struct Node {
    routes: Vec<Option<Route>>,
    last_heard: Vec<f64>,
    seen: HashSet<(usize, u32)>,
    next_rreq_id: u32,
    discovery: Vec<Option<Discovery>>,
    buffer: Vec<VecDeque<Packet>>,
    traffic: Vec<(f64, f64)>,
    hellos: u64,
    energy: f64,
}

impl Node {
    fn new(n: usize) -> Self {
        Self {
            routes: vec![None; n],
            last_heard: vec![f64::NEG_INFINITY; n],
            seen: HashSet::new(),
            next_rreq_id: 0,
            discovery: vec![None; n],
            buffer: vec![VecDeque::new(); n],
            traffic: Vec::new(),
            hellos: 0,
            energy: 0.0,
        }
    }
}

pub(super) struct Engine<'a> {
    cfg: &'a AodvConfig,
    scenario: &'a Scenario,
    options: SimOptions,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: f64,
    end: f64,
    ring: Vec<u32>,
    nodes: Vec<Node>,
    out: SimOutcome,
    discoveries_succeeded: u64,
    frames: Vec<FrameRecord>,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        cfg: &'a AodvConfig,
        scenario: &'a Scenario,
        seed: u64,
        options: SimOptions,
    ) -> Self {
        let n = scenario.node_count();
        let mut nodes: Vec<Node> = (0..n).map(|_| Node::new(n)).collect();
        let cbr = &scenario.spec.cbr;
        for f in &scenario.flows {
            nodes[f.source].traffic.push((f.start, f.start + cbr.duration));
        }
        let mut engine = Self {
            cfg,
            scenario,
            options,
            rng: rng::stream(seed, Purpose::Replication, 0, 0),
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            end: scenario.spec.sim_duration,
            ring: ring_ttl_sequence(cfg),
            nodes,
            out: SimOutcome::default(),
            discoveries_succeeded: 0,
            frames: Vec::new(),
        };
        for node in 0..n {
            let phase = engine.rng.random::<f64>() * cfg.hello_interval;
            engine.schedule(phase, node, Event::HelloTick);
        }
        if cbr.packets_per_flow() > 0 {
            for (flow, f) in scenario.flows.iter().enumerate() {
                engine.schedule(f.start, f.source, Event::CbrEmit { flow, k: 0 });
            }
        }
        engine
    }

    pub(super) fn run(mut self) -> SimRun {
        while let Some(ev) = self.queue.pop() {
            if ev.time > self.end {
                break;
            }
            self.now = ev.time;
            self.dispatch(ev.node, ev.event);
        }
        let mut out = self.out;
        out.pdr = if out.data_packets_sent == 0 {
            0.0
        } else {
            out.data_packets_delivered as f64 / out.data_packets_sent as f64
        };
        out.energy_joules = self.nodes.iter().map(|n| n.energy).sum();
        SimRun {
            outcome: out,
            hello_per_node: self.nodes.iter().map(|n| n.hellos).collect(),
            energy_per_node: self.nodes.iter().map(|n| n.energy).collect(),
            discoveries_succeeded: self.discoveries_succeeded,
            frames: self.options.record_frames.then_some(self.frames),
        }
    }

    fn schedule(&mut self, time: f64, node: usize, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            node,
            seq: self.seq,
            event,
        });
    }

    fn dispatch(&mut self, node: usize, event: Event) {
        match event {
            Event::HelloTick => self.on_hello_tick(node),
            Event::CbrEmit { flow, k } => self.on_cbr(flow, k),
            Event::Receive { from, payload } => self.on_receive(node, from, payload),
            Event::RingTimeout { dest, token } => self.on_ring_timeout(node, dest, token),
            Event::Rebroadcast { payload } => {
                self.out.rreq_count += 1;
                self.transmit(node, None, payload);
            }
        }
    }

    // ---- radio -------------------------------------------------------

    fn airtime(&self, kind: FrameKind) -> (u32, f64) {
        let spec = &self.scenario.spec;
        let bytes = kind.payload_bytes(spec.cbr.packet_bytes) + spec.channel.frame_overhead_bytes;
        (bytes, f64::from(bytes) * 8.0 / spec.channel.bandwidth_bps)
    }

    fn decodes(&mut self, from: (f64, f64), to: usize) -> bool {
        let (x, y) = self.scenario.trace.position(to, self.now);
        let d = (x - from.0).hypot(y - from.1);
        let p = reception_probability(d, &self.scenario.spec.channel);
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            self.rng.random::<f64>() < p
        }
    }

    /// Sends a frame (`to = None` broadcasts), charging energy to the sender
    /// and to every node that decodes it.
    fn transmit(&mut self, sender: usize, to: Option<usize>, payload: Payload) {
        let kind = payload.kind();
        let (bytes, air) = self.airtime(kind);
        let energy = &self.scenario.spec.energy;
        let (tx, rx) = (air * energy.tx_watts, air * energy.rx_watts);
        self.nodes[sender].energy += tx;

        let origin = self.scenario.trace.position(sender, self.now);
        let mut receivers = 0u32;
        let targets: Vec<usize> = match to {
            Some(dst) => vec![dst],
            None => (0..self.nodes.len()).filter(|&r| r != sender).collect(),
        };
        for r in targets {
            if self.decodes(origin, r) {
                receivers += 1;
                self.nodes[r].energy += rx;
                self.schedule(self.now + air, r, Event::Receive { from: sender, payload });
            }
        }
        if self.options.record_frames {
            self.frames.push(FrameRecord {
                time: self.now,
                sender,
                kind,
                bytes,
                receivers,
            });
        }
    }

    // ---- routing state -----------------------------------------------

    fn valid_route(&self, node: usize, dest: usize) -> Option<Route> {
        self.nodes[node].routes[dest].filter(|r| r.expires >= self.now)
    }

    fn link_alive(&self, node: usize, neighbour: usize) -> bool {
        self.now - self.nodes[node].last_heard[neighbour] <= self.cfg.link_loss_timeout()
    }

    /// Next hop for data, refreshing the route on use. Expired routes and
    /// routes over a silent link are dropped.
    fn forward_hop(&mut self, node: usize, dest: usize) -> Option<usize> {
        let Some(route) = self.valid_route(node, dest) else {
            self.nodes[node].routes[dest] = None;
            return None;
        };
        if !self.link_alive(node, route.next_hop) {
            self.nodes[node].routes[dest] = None;
            return None;
        }
        let refreshed = Route {
            expires: route.expires.max(self.now + self.cfg.active_route_timeout),
            active: true,
            ..route
        };
        self.nodes[node].routes[dest] = Some(refreshed);
        Some(route.next_hop)
    }

    fn has_active_route(&self, node: usize) -> bool {
        self.nodes[node]
            .routes
            .iter()
            .flatten()
            .any(|r| r.active && r.expires >= self.now)
    }

    fn has_pending_traffic(&self, node: usize) -> bool {
        self.nodes[node]
            .traffic
            .iter()
            .any(|&(a, b)| a <= self.now && self.now < b)
    }

    /// Points `node`'s route to `dest` at `via`, keeping the longer lifetime
    /// of an existing valid entry.
    fn touch_route(&mut self, node: usize, dest: usize, via: usize, hops: u32, active: bool) {
        let lifetime = self.now + self.cfg.active_route_timeout;
        let prev = self.valid_route(node, dest);
        self.nodes[node].routes[dest] = Some(Route {
            next_hop: via,
            hops,
            expires: prev.map_or(lifetime, |r| r.expires.max(lifetime)),
            active: active || prev.is_some_and(|r| r.active),
        });
    }

    fn mark_active(&mut self, node: usize, dest: usize) {
        if let Some(r) = self.nodes[node].routes[dest].as_mut() {
            r.active = true;
        }
    }

    // ---- handlers ----------------------------------------------------

    fn on_hello_tick(&mut self, node: usize) {
        if self.has_active_route(node) || self.has_pending_traffic(node) {
            self.nodes[node].hellos += 1;
            self.out.hello_count += 1;
            self.transmit(node, None, Payload::Hello);
        }
        self.schedule(self.now + self.cfg.hello_interval, node, Event::HelloTick);
    }

    fn on_cbr(&mut self, flow: usize, k: u64) {
        let f = self.scenario.flows[flow];
        let cbr = &self.scenario.spec.cbr;
        if k + 1 < cbr.packets_per_flow() {
            let next = f.start + (k + 1) as f64 * cbr.interval();
            self.schedule(next, f.source, Event::CbrEmit { flow, k: k + 1 });
        }
        self.out.data_packets_sent += 1;
        let packet = Packet {
            origin: f.source,
            dest: f.destination,
            hops: 0,
        };
        match self.forward_hop(f.source, f.destination) {
            Some(hop) => self.send_data(f.source, hop, packet),
            None => {
                let node = &mut self.nodes[f.source];
                if node.buffer[f.destination].len() < BUFFER_LIMIT {
                    node.buffer[f.destination].push_back(packet);
                }
                if node.discovery[f.destination].is_none() {
                    self.start_discovery(f.source, f.destination);
                }
            }
        }
    }

    fn send_data(&mut self, node: usize, hop: usize, packet: Packet) {
        let packet = Packet {
            hops: packet.hops + 1,
            ..packet
        };
        self.transmit(node, Some(hop), Payload::Data(packet));
    }

    fn start_discovery(&mut self, node: usize, dest: usize) {
        self.seq += 1;
        self.nodes[node].discovery[dest] = Some(Discovery {
            attempt: 0,
            token: self.seq,
        });
        self.send_rreq(node, dest);
    }

    fn send_rreq(&mut self, node: usize, dest: usize) {
        let Some(d) = self.nodes[node].discovery[dest] else {
            return;
        };
        let ttl = self.ring[d.attempt];
        let id = self.nodes[node].next_rreq_id;
        self.nodes[node].next_rreq_id += 1;
        self.nodes[node].seen.insert((node, id));
        self.out.rreq_count += 1;
        self.transmit(
            node,
            None,
            Payload::Rreq {
                origin: node,
                id,
                dest,
                ttl,
                hops: 0,
            },
        );
        let wait = ring_timeout(ttl, self.cfg);
        self.schedule(
            self.now + wait,
            node,
            Event::RingTimeout {
                dest,
                token: d.token,
            },
        );
    }

    fn on_ring_timeout(&mut self, node: usize, dest: usize, token: u64) {
        let Some(d) = self.nodes[node].discovery[dest] else {
            return;
        };
        if d.token != token {
            return;
        }
        if d.attempt + 1 < self.ring.len() {
            self.nodes[node].discovery[dest] = Some(Discovery {
                attempt: d.attempt + 1,
                ..d
            });
            self.send_rreq(node, dest);
        } else {
            self.nodes[node].discovery[dest] = None;
            self.nodes[node].buffer[dest].clear();
            self.out.route_discoveries_failed += 1;
        }
    }

    fn on_receive(&mut self, node: usize, from: usize, payload: Payload) {
        self.nodes[node].last_heard[from] = self.now;
        match payload {
            Payload::Hello => {}
            Payload::Rreq {
                origin,
                id,
                dest,
                ttl,
                hops,
            } => self.on_rreq(node, from, origin, id, dest, ttl, hops),
            Payload::Rrep {
                origin,
                dest,
                hops,
                lifetime,
            } => self.on_rrep(node, from, origin, dest, hops, lifetime),
            Payload::Rerr { dest } => {
                let breaks = self
                    .valid_route(node, dest)
                    .is_some_and(|r| r.next_hop == from);
                if breaks {
                    self.nodes[node].routes[dest] = None;
                    self.out.rerr_count += 1;
                    self.transmit(node, None, Payload::Rerr { dest });
                }
            }
            Payload::Data(packet) => self.on_data(node, from, packet),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_rreq(
        &mut self,
        node: usize,
        from: usize,
        origin: usize,
        id: u32,
        dest: usize,
        ttl: u32,
        hops: u32,
    ) {
        if !self.nodes[node].seen.insert((origin, id)) {
            return;
        }
        self.touch_route(node, origin, from, hops + 1, false);

        let reply = if node == dest {
            Some((0, self.cfg.my_route_timeout))
        } else {
            self.valid_route(node, dest)
                .filter(|r| r.active && r.next_hop != from)
                .map(|r| (r.hops, r.expires - self.now))
        };
        if let Some((hops, lifetime)) = reply {
            self.mark_active(node, origin);
            self.out.rrep_count += 1;
            self.transmit(
                node,
                Some(from),
                Payload::Rrep {
                    origin,
                    dest,
                    hops,
                    lifetime,
                },
            );
        } else if ttl > 1 {
            let delay = self.rng.random::<f64>() * RREQ_JITTER;
            self.schedule(
                self.now + delay,
                node,
                Event::Rebroadcast {
                    payload: Payload::Rreq {
                        origin,
                        id,
                        dest,
                        ttl: ttl - 1,
                        hops: hops + 1,
                    },
                },
            );
        }
    }

    fn on_rrep(
        &mut self,
        node: usize,
        from: usize,
        origin: usize,
        dest: usize,
        hops: u32,
        lifetime: f64,
    ) {
        // Newest reply wins.
        self.nodes[node].routes[dest] = Some(Route {
            next_hop: from,
            hops: hops + 1,
            expires: self.now + lifetime,
            active: true,
        });
        if node == origin {
            if self.nodes[node].discovery[dest].take().is_some() {
                self.discoveries_succeeded += 1;
            }
            while let Some(packet) = self.nodes[node].buffer[dest].pop_front() {
                match self.forward_hop(node, dest) {
                    Some(hop) => self.send_data(node, hop, packet),
                    None => {
                        self.nodes[node].buffer[dest].clear();
                        break;
                    }
                }
            }
            return;
        }
        if let Some(back) = self.valid_route(node, origin) {
            self.mark_active(node, origin);
            self.out.rrep_count += 1;
            self.transmit(
                node,
                Some(back.next_hop),
                Payload::Rrep {
                    origin,
                    dest,
                    hops: hops + 1,
                    lifetime,
                },
            );
        }
    }

    fn on_data(&mut self, node: usize, from: usize, packet: Packet) {
        self.touch_route(node, packet.origin, from, packet.hops, true);
        if node == packet.dest {
            self.out.data_packets_delivered += 1;
            return;
        }
        match self.forward_hop(node, packet.dest) {
            Some(hop) => self.send_data(node, hop, packet),
            None => {
                self.out.rerr_count += 1;
                self.transmit(node, None, Payload::Rerr { dest: packet.dest });
            }
        }
    }
}
