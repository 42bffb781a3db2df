//! Deterministic discrete-event network: links with serialization and
//! propagation delay, OLSR control traffic, IPsec at the endpoints and plain
//! forwarding at intermediates.

pub mod delay;
pub mod topology;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use delay::{DelayMode, DelayModel, ParametricCosts, PrimitiveCost, DEFAULT_FORWARD_US};
pub use topology::{LinkParams, NodeId, Topology, DEFAULT_BANDWIDTH_BPS, DEFAULT_PROPAGATION_US};

use crate::crypto::CryptoCostSample;
use crate::ipsec::{self, FilterChain, ProtocolFilter, SecurityDatabases};
use crate::metrics::{DropCause, NodeCounters};
use crate::olsr::{self, OlsrConfig, OlsrNode, OlsrPacket, OlsrStats, RoutingTable};
use crate::traffic::{Sink, StreamConfig, StreamError};
use crate::wire::{self, Address, HexTraceLine, Packet, Protocol, StreamStamp, TraceDirection, Transport, TTL_OFFSET};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub delay: DelayModel,
    pub olsr: OlsrConfig,
    /// Keep a hex dump of every frame sent and received.
    pub capture_hex: bool,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            seed,
            delay: DelayModel::default(),
            olsr: OlsrConfig::default(),
            capture_hex: false,
        }
    }
}

/// Time one node spent on a packet, and the link it then crossed. The last
/// entry of a delivered packet is the receiver's inbound processing with no
/// link component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HopCost {
    pub processing_us: u64,
    pub serialization_us: u64,
    pub propagation_us: u64,
}

impl HopCost {
    pub fn total(&self) -> u64 {
        self.processing_us + self.serialization_us + self.propagation_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Emit,
    Tx,
    Rx,
    Fwd,
    Deliver,
    Drop(DropCause),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Emit => f.write_str("emit"),
            Action::Tx => f.write_str("tx"),
            Action::Rx => f.write_str("rx"),
            Action::Fwd => f.write_str("fwd"),
            Action::Deliver => f.write_str("deliver"),
            Action::Drop(c) => write!(f, "drop:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub time_us: u64,
    pub node: NodeId,
    pub action: Action,
    /// Outer protocol as seen on the wire.
    pub protocol: Protocol,
    pub bytes: usize,
    pub stamp: Option<StreamStamp>,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.time_us, self.node, self.action, self.protocol, self.bytes)?;
        match self.stamp {
            Some(s) => write!(f, " {}:{}", s.stream_id, s.packet_id),
            None => f.write_str(" -"),
        }
    }
}

/// SHA-256 over the text form of every entry, one per line.
pub fn trace_hash(trace: &[TraceEntry]) -> String {
    let mut h = Sha256::new();
    for e in trace {
        h.update(e.to_string().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// A stream packet that reached its destination application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub stamp: StreamStamp,
    pub node: NodeId,
    pub sent_us: u64,
    pub recv_us: u64,
    pub hops: Vec<HopCost>,
}

impl Delivery {
    pub fn delay_us(&self) -> u64 {
        self.recv_us - self.sent_us
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamAccount {
    pub config: StreamConfig,
    pub sent: u64,
    pub received: u64,
    pub duplicates: u64,
    pub in_flight: u64,
    pub drops: BTreeMap<DropCause, u64>,
    /// (packet id, emission time) in emission order.
    pub emissions: Vec<(u64, u64)>,
}

impl StreamAccount {
    pub fn dropped(&self) -> u64 {
        self.drops.values().sum()
    }

    /// sent == received + in flight + drops.
    pub fn balanced(&self) -> bool {
        self.sent == self.received + self.in_flight + self.dropped()
    }
}

#[derive(Debug, Clone, Default)]
struct PacketMeta {
    stamp: Option<StreamStamp>,
    sent_us: u64,
    hops: Vec<HopCost>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimerKind {
    Hello,
    Tc,
}

#[derive(Debug)]
enum EventKind {
    Emit { stream: usize, index: u64 },
    Timer { node: usize, kind: TimerKind },
    Originate { node: usize, packet: Packet },
    Transmit { node: usize, to: Option<usize>, bytes: Vec<u8>, meta: PacketMeta },
    Arrival { to: usize, bytes: Vec<u8>, meta: PacketMeta },
    Deliver { node: usize, stamp: Option<StreamStamp>, protocol: Protocol, bytes: usize, meta: PacketMeta },
}

impl EventKind {
    fn carries_stream(&self) -> Option<StreamStamp> {
        match self {
            EventKind::Transmit { meta, .. } | EventKind::Arrival { meta, .. } | EventKind::Deliver { meta, .. } => {
                meta.stamp
            }
            _ => None,
        }
    }
}

#[derive(Debug)]
struct Scheduled {
    time: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // min-heap on (time, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct SimNode {
    id: NodeId,
    addr: Address,
    olsr: OlsrNode,
    dbs: SecurityDatabases,
    filter: ProtocolFilter,
    counters: NodeCounters,
    iv_rng: ChaCha8Rng,
}

struct StreamState {
    account: StreamAccount,
    src: usize,
    rng: ChaCha8Rng,
}

/// Per-purpose random streams, all derived from the run seed.
fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

const RNG_TIMERS: u64 = 1;
const RNG_LOSS: u64 = 2;
const RNG_IV_BASE: u64 = 1 << 32;
const RNG_PAYLOAD_BASE: u64 = 2 << 32;

pub struct Simulator {
    topology: Topology,
    config: SimConfig,
    nodes: Vec<SimNode>,
    index: BTreeMap<NodeId, usize>,
    streams: Vec<StreamState>,
    queue: BinaryHeap<Scheduled>,
    next_seq: u64,
    now: u64,
    loss_rng: ChaCha8Rng,
    trace: Vec<TraceEntry>,
    hex: Vec<HexTraceLine>,
    deliveries: Vec<Delivery>,
    sink: Sink,
}

impl Simulator {
    /// Builds the network and schedules each node's first HELLO and TC at a
    /// seed-derived phase within one interval.
    pub fn new(topology: Topology, config: SimConfig) -> Result<Self, SimError> {
        let mut timers = sub_rng(config.seed, RNG_TIMERS);
        let mut sim = Simulator {
            nodes: Vec::with_capacity(topology.nodes.len()),
            index: BTreeMap::new(),
            streams: Vec::new(),
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
            loss_rng: sub_rng(config.seed, RNG_LOSS),
            trace: Vec::new(),
            hex: Vec::new(),
            deliveries: Vec::new(),
            sink: Sink::new(),
            topology,
            config,
        };
        if config.olsr.hello_interval_us == 0 || config.olsr.tc_interval_us == 0 {
            return Err(SimError::Config("OLSR intervals must be positive".into()));
        }
        for (i, (id, addr)) in sim.topology.nodes.clone().into_iter().enumerate() {
            sim.index.insert(id, i);
            sim.nodes.push(SimNode {
                id,
                addr,
                olsr: OlsrNode::new(addr, config.olsr),
                dbs: SecurityDatabases::new(),
                filter: ProtocolFilter::default(),
                counters: NodeCounters::default(),
                iv_rng: sub_rng(config.seed, RNG_IV_BASE + id as u64),
            });
            let hello = timers.gen_range(0..config.olsr.hello_interval_us);
            let tc = timers.gen_range(0..config.olsr.tc_interval_us);
            sim.schedule(hello, EventKind::Timer { node: i, kind: TimerKind::Hello });
            sim.schedule(tc, EventKind::Timer { node: i, kind: TimerKind::Tc });
        }
        Ok(sim)
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    fn idx(&self, id: NodeId) -> Result<usize, SimError> {
        self.index.get(&id).copied().ok_or(SimError::UnknownNode(id))
    }

    pub fn set_security(&mut self, node: NodeId, dbs: SecurityDatabases) -> Result<(), SimError> {
        let i = self.idx(node)?;
        self.nodes[i].dbs = dbs;
        Ok(())
    }

    pub fn set_filter(&mut self, node: NodeId, filter: ProtocolFilter) -> Result<(), SimError> {
        let i = self.idx(node)?;
        self.nodes[i].filter = filter;
        Ok(())
    }

    pub fn olsr(&self, node: NodeId) -> Option<&OlsrNode> {
        self.index.get(&node).map(|&i| &self.nodes[i].olsr)
    }

    /// Registers a stream; its id is its registration index.
    pub fn add_stream(&mut self, mut config: StreamConfig) -> Result<u32, SimError> {
        config.validate()?;
        let src = self
            .topology
            .node_by_address(config.src)
            .ok_or_else(|| SimError::Config(format!("stream source {} is not a node", config.src)))?;
        if self.topology.node_by_address(config.dst).is_none() {
            return Err(SimError::Config(format!("stream destination {} is not a node", config.dst)));
        }
        let id = self.streams.len() as u32;
        config.stream_id = id;
        let src = self.idx(src)?;
        if config.packet_count() > 0 {
            self.schedule(config.emission_time(0), EventKind::Emit { stream: id as usize, index: 0 });
        }
        self.streams.push(StreamState {
            account: StreamAccount {
                config,
                sent: 0,
                received: 0,
                duplicates: 0,
                in_flight: 0,
                drops: BTreeMap::new(),
                emissions: Vec::new(),
            },
            src,
            rng: sub_rng(self.config.seed, RNG_PAYLOAD_BASE + id as u64),
        });
        Ok(id)
    }

    /// Hands `packet` to `node`'s network layer at `time` as if a local
    /// application had sent it.
    pub fn inject(&mut self, time: u64, node: NodeId, packet: Packet) -> Result<(), SimError> {
        let node = self.idx(node)?;
        self.schedule(time.max(self.now), EventKind::Originate { node, packet });
        Ok(())
    }

    fn schedule(&mut self, time: u64, kind: EventKind) {
        self.queue.push(Scheduled {
            time,
            seq: self.next_seq,
            kind,
        });
        self.next_seq += 1;
    }

    /// Processes every event with time ≤ `t_end`.
    pub fn run_until(&mut self, t_end: u64) {
        while self.queue.peek().is_some_and(|e| e.time <= t_end) {
            let ev = self.queue.pop().expect("peeked");
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            self.dispatch(ev.kind);
        }
        self.now = self.now.max(t_end);
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::Emit { stream, index } => self.on_emit(stream, index),
            EventKind::Timer { node, kind } => self.on_timer(node, kind),
            EventKind::Originate { node, packet } => self.originate(node, packet, PacketMeta::default()),
            EventKind::Transmit { node, to, bytes, meta } => self.on_transmit(node, to, bytes, meta),
            EventKind::Arrival { to, bytes, meta } => self.on_arrival(to, bytes, meta),
            EventKind::Deliver {
                node,
                stamp,
                protocol,
                bytes,
                meta,
            } => self.on_deliver(node, stamp, protocol, bytes, meta),
        }
    }

    fn record(&mut self, node: usize, action: Action, protocol: Protocol, bytes: usize, stamp: Option<StreamStamp>) {
        self.trace.push(TraceEntry {
            time_us: self.now,
            node: self.nodes[node].id,
            action,
            protocol,
            bytes,
            stamp,
        });
    }

    fn drop_packet(&mut self, node: usize, cause: DropCause, protocol: Protocol, bytes: usize, meta: &PacketMeta) {
        *self.nodes[node].counters.drops.entry(cause).or_default() += 1;
        if let Some(s) = meta.stamp {
            if let Some(st) = self.streams.get_mut(s.stream_id as usize) {
                *st.account.drops.entry(cause).or_default() += 1;
            }
        }
        self.record(node, Action::Drop(cause), protocol, bytes, meta.stamp);
    }

    fn capture(&mut self, node: usize, direction: TraceDirection, bytes: &[u8]) {
        if self.config.capture_hex {
            self.hex.push(HexTraceLine {
                time_us: self.now,
                node: self.nodes[node].id,
                direction,
                bytes: bytes.to_vec(),
            });
        }
    }

    fn on_emit(&mut self, stream: usize, index: u64) {
        let st = &mut self.streams[stream];
        let cfg = &st.account.config;
        if index + 1 < cfg.packet_count() {
            let next = cfg.emission_time(index + 1);
            self.schedule(next, EventKind::Emit { stream, index: index + 1 });
        }
        let st = &mut self.streams[stream];
        let cfg = &st.account.config;
        let payload = cfg.payload(index, &mut st.rng);
        let packet = Packet::udp(cfg.src, cfg.dst, payload);
        st.account.sent += 1;
        st.account.emissions.push((index, self.now));
        let src = st.src;
        let meta = PacketMeta {
            stamp: packet.stamp(),
            sent_us: self.now,
            hops: Vec::new(),
        };
        self.record(src, Action::Emit, Protocol::Udp, packet.wire_len(), meta.stamp);
        self.originate(src, packet, meta);
    }

    /// Local send path: outbound IPsec, output filter, route lookup.
    fn originate(&mut self, node: usize, packet: Packet, mut meta: PacketMeta) {
        if meta.stamp.is_none() {
            meta.sent_us = self.now;
        }
        let mut samples: Vec<CryptoCostSample> = Vec::new();
        let n = &mut self.nodes[node];
        let inner_len = packet.wire_len();
        let packet = match ipsec::outbound(packet, &mut n.dbs, &mut n.iv_rng, &mut samples) {
            Ok(p) => p,
            Err(_) => return self.drop_packet(node, DropCause::OutboundError, Protocol::Udp, inner_len, &meta),
        };
        let processing = self.config.delay.charge(&samples);
        let protocol = packet.header.protocol;
        let bytes = match wire::serialize(&packet) {
            Ok(b) => b,
            Err(_) => return self.drop_packet(node, DropCause::Malformed, protocol, inner_len, &meta),
        };
        if !self.nodes[node].filter.permits(FilterChain::Output, protocol) {
            return self.drop_packet(node, DropCause::Filtered, protocol, bytes.len(), &meta);
        }
        let dst = packet.header.dst;
        let to = if dst.is_broadcast() {
            None
        } else {
            match self.next_hop(node, dst) {
                Some(t) => Some(t),
                None => return self.drop_packet(node, DropCause::NoRoute, protocol, bytes.len(), &meta),
            }
        };
        meta.hops.push(HopCost {
            processing_us: processing,
            ..HopCost::default()
        });
        self.schedule(self.now + processing, EventKind::Transmit { node, to, bytes, meta });
    }

    fn next_hop(&self, node: usize, dst: Address) -> Option<usize> {
        let route = self.nodes[node].olsr.routes.lookup(dst)?;
        let id = self.topology.node_by_address(route.next_hop)?;
        self.index.get(&id).copied()
    }

    fn on_timer(&mut self, node: usize, kind: TimerKind) {
        let now = self.now;
        let (packet, interval) = match kind {
            TimerKind::Hello => (
                Some(self.nodes[node].olsr.emit_hello(now)),
                self.config.olsr.hello_interval_us,
            ),
            TimerKind::Tc => (self.nodes[node].olsr.emit_tc(now), self.config.olsr.tc_interval_us),
        };
        self.schedule(now + interval, EventKind::Timer { node, kind });
        if let Some(p) = packet {
            self.send_control(node, &p);
        }
    }

    fn send_control(&mut self, node: usize, packet: &OlsrPacket) {
        let wire = olsr::to_wire(self.nodes[node].addr, packet);
        self.originate(node, wire, PacketMeta::default());
    }

    fn on_transmit(&mut self, node: usize, to: Option<usize>, bytes: Vec<u8>, meta: PacketMeta) {
        let protocol = Protocol::from_code(bytes[9]).unwrap_or(Protocol::Udp);
        let me = self.nodes[node].id;
        let targets: Vec<usize> = match to {
            Some(t) => {
                if self.topology.link(me, self.nodes[t].id).is_none() {
                    return self.drop_packet(node, DropCause::OutOfRange, protocol, bytes.len(), &meta);
                }
                vec![t]
            }
            None => self
                .topology
                .neighbors(me)
                .into_iter()
                .filter_map(|id| self.index.get(&id).copied())
                .collect(),
        };
        let c = &mut self.nodes[node].counters;
        c.tx_packets += 1;
        c.tx_bytes += bytes.len() as u64;
        self.record(node, Action::Tx, protocol, bytes.len(), meta.stamp);
        self.capture(node, TraceDirection::Tx, &bytes);
        for t in targets {
            let link = *self.topology.link(me, self.nodes[t].id).expect("neighbor link");
            if link.loss > 0.0 && self.loss_rng.gen_bool(link.loss) {
                self.drop_packet(node, DropCause::Loss, protocol, bytes.len(), &meta);
                continue;
            }
            let mut m = meta.clone();
            let hop = m.hops.last_mut().expect("sender hop");
            hop.serialization_us = link.serialization_us(bytes.len());
            hop.propagation_us = link.propagation_us;
            let at = self.now + hop.serialization_us + hop.propagation_us;
            self.schedule(
                at,
                EventKind::Arrival {
                    to: t,
                    bytes: bytes.clone(),
                    meta: m,
                },
            );
        }
    }

    fn on_arrival(&mut self, to: usize, mut bytes: Vec<u8>, mut meta: PacketMeta) {
        let c = &mut self.nodes[to].counters;
        c.rx_packets += 1;
        c.rx_bytes += bytes.len() as u64;
        self.capture(to, TraceDirection::Rx, &bytes);
        let packet = match wire::deserialize(&bytes) {
            Ok(p) => p,
            Err(_) => {
                let protocol = bytes.get(9).and_then(|b| Protocol::from_code(*b).ok()).unwrap_or(Protocol::Udp);
                self.record(to, Action::Rx, protocol, bytes.len(), meta.stamp);
                return self.drop_packet(to, DropCause::Malformed, protocol, bytes.len(), &meta);
            }
        };
        let protocol = packet.header.protocol;
        let len = bytes.len();
        self.record(to, Action::Rx, protocol, len, meta.stamp);
        let me = self.nodes[to].addr;
        let dst = packet.header.dst;

        if dst == me || dst.is_broadcast() {
            if !self.nodes[to].filter.permits(FilterChain::Input, protocol) {
                return self.drop_packet(to, DropCause::Filtered, protocol, len, &meta);
            }
            if dst.is_broadcast() {
                return self.on_broadcast(to, packet, len, meta);
            }
            let mut samples: Vec<CryptoCostSample> = Vec::new();
            let packet = match ipsec::inbound(packet, &mut self.nodes[to].dbs, &mut samples) {
                Ok(p) => p,
                Err(r) => return self.drop_packet(to, DropCause::Security(r), protocol, len, &meta),
            };
            let processing = self.config.delay.charge(&samples);
            meta.hops.push(HopCost {
                processing_us: processing,
                ..HopCost::default()
            });
            let stamp = packet.stamp();
            self.schedule(
                self.now + processing,
                EventKind::Deliver {
                    node: to,
                    stamp,
                    protocol,
                    bytes: len,
                    meta,
                },
            );
            return;
        }

        if !self.nodes[to].filter.permits(FilterChain::Forward, protocol) {
            return self.drop_packet(to, DropCause::Filtered, protocol, len, &meta);
        }
        if packet.header.ttl <= 1 {
            return self.drop_packet(to, DropCause::TtlExpired, protocol, len, &meta);
        }
        let Some(next) = self.next_hop(to, dst) else {
            return self.drop_packet(to, DropCause::NoRoute, protocol, len, &meta);
        };
        bytes[TTL_OFFSET] -= 1;
        let c = &mut self.nodes[to].counters;
        c.fwd_packets += 1;
        c.fwd_bytes += len as u64;
        self.record(to, Action::Fwd, protocol, len, meta.stamp);
        let forward = self.config.delay.forward_us;
        meta.hops.push(HopCost {
            processing_us: forward,
            ..HopCost::default()
        });
        self.schedule(
            self.now + forward,
            EventKind::Transmit {
                node: to,
                to: Some(next),
                bytes,
                meta,
            },
        );
    }

    fn on_broadcast(&mut self, to: usize, packet: Packet, len: usize, meta: PacketMeta) {
        let protocol = packet.header.protocol;
        let Some(Transport::Olsr(body)) = packet.transport else {
            return self.drop_packet(to, DropCause::Malformed, protocol, len, &meta);
        };
        let Ok(olsr_packet) = OlsrPacket::decode(&body) else {
            return self.drop_packet(to, DropCause::Malformed, protocol, len, &meta);
        };
        self.record(to, Action::Deliver, protocol, len, None);
        let now = self.now;
        if let Some(relay) = self.nodes[to].olsr.receive(packet.header.src, &olsr_packet, now) {
            self.send_control(to, &relay);
        }
    }

    fn on_deliver(
        &mut self,
        node: usize,
        stamp: Option<StreamStamp>,
        protocol: Protocol,
        bytes: usize,
        meta: PacketMeta,
    ) {
        self.record(node, Action::Deliver, protocol, bytes, meta.stamp);
        let (Some(stamp), Some(_)) = (stamp, meta.stamp) else {
            return;
        };
        debug_assert_eq!(Some(stamp), meta.stamp);
        let receipt = self.sink.record(self.nodes[node].id, stamp, self.now);
        if let Some(st) = self.streams.get_mut(stamp.stream_id as usize) {
            if receipt.duplicate {
                st.account.duplicates += 1;
            } else {
                st.account.received += 1;
            }
        }
        self.deliveries.push(Delivery {
            stamp,
            node: self.nodes[node].id,
            sent_us: meta.sent_us,
            recv_us: self.now,
            hops: meta.hops,
        });
    }

    /// Stops the clock and collects the results. Stream packets still queued
    /// are counted as in flight.
    pub fn finish(mut self) -> SimResult {
        for ev in self.queue.iter() {
            if let Some(s) = ev.kind.carries_stream() {
                if let Some(st) = self.streams.get_mut(s.stream_id as usize) {
                    st.account.in_flight += 1;
                }
            }
        }
        let trace_hash = trace_hash(&self.trace);
        SimResult {
            end_us: self.now,
            trace_hash,
            trace: self.trace,
            hex: self.hex,
            deliveries: self.deliveries,
            sink: self.sink,
            streams: self.streams.into_iter().map(|s| s.account).collect(),
            counters: self.nodes.iter().map(|n| (n.id, n.counters.clone())).collect(),
            routes: self.nodes.iter().map(|n| (n.id, n.olsr.routes.clone())).collect(),
            olsr_stats: self.nodes.iter().map(|n| (n.id, n.olsr.stats)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub end_us: u64,
    pub trace: Vec<TraceEntry>,
    pub trace_hash: String,
    pub hex: Vec<HexTraceLine>,
    pub deliveries: Vec<Delivery>,
    pub sink: Sink,
    pub streams: Vec<StreamAccount>,
    pub counters: BTreeMap<NodeId, NodeCounters>,
    pub routes: BTreeMap<NodeId, RoutingTable>,
    pub olsr_stats: BTreeMap<NodeId, OlsrStats>,
}

impl SimResult {
    /// Per-stream conservation and exact delay decomposition.
    pub fn check_invariants(&self) -> Result<(), SimError> {
        for s in &self.streams {
            if !s.balanced() {
                return Err(SimError::Invariant(format!(
                    "stream {}: sent {} != received {} + in flight {} + dropped {}",
                    s.config.stream_id,
                    s.sent,
                    s.received,
                    s.in_flight,
                    s.dropped()
                )));
            }
        }
        for d in &self.deliveries {
            let sum: u64 = d.hops.iter().map(HopCost::total).sum();
            if d.delay_us() != sum {
                return Err(SimError::Invariant(format!(
                    "packet {}:{} delay {} us != per-hop sum {} us",
                    d.stamp.stream_id,
                    d.stamp.packet_id,
                    d.delay_us(),
                    sum
                )));
            }
        }
        Ok(())
    }

    /// `<node> <dest> <nexthop> <hops>` per route.
    pub fn dump_routes(&self) -> String {
        let mut out = String::new();
        for (node, table) in &self.routes {
            for line in table.to_string().lines() {
                out.push_str(&format!("{node} {line}\n"));
            }
        }
        out
    }

    /// Emissions and first receipts of one stream as (packet id, time) lists.
    pub fn stream_times(&self, stream_id: u32) -> (Vec<(u64, u64)>, Vec<(u64, u64)>) {
        let send = self
            .streams
            .get(stream_id as usize)
            .map(|s| s.emissions.clone())
            .unwrap_or_default();
        let recv = self.sink.unique(stream_id).map(|r| (r.packet_id, r.rx_time_us)).collect();
        (send, recv)
    }

    pub fn trace_text(&self) -> String {
        let mut out = String::new();
        for e in &self.trace {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests;
