use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::crypto::{AuthAlgorithm, CipherAlgorithm};
use crate::ipsec::{ProtocolSet, Reject};
use crate::olsr::{FloodMode, SECOND_US};
use crate::wire::{Transport, UdpPayload};

const WARMUP: u64 = 20 * SECOND_US;

fn secured(a: Address, b: Address) -> (SecurityDatabases, SecurityDatabases) {
    let x = SecurityDatabases::host_to_host(
        a,
        b,
        Some((CipherAlgorithm::AesCbc, vec![1; 24], vec![2; 24])),
        Some((AuthAlgorithm::HmacSha1, vec![3; 20], vec![4; 20])),
    )
    .unwrap();
    let y = x.mirrored();
    (x, y)
}

fn stream(topo: &Topology, from: NodeId, to: NodeId, secs: u64) -> StreamConfig {
    let mut s = StreamConfig::new(topo.address(from).unwrap(), topo.address(to).unwrap());
    s.start_us = WARMUP;
    s.duration_us = secs * SECOND_US;
    s
}

fn run(topo: Topology, seed: u64, secure: bool, secs: u64) -> SimResult {
    let dst = topo.nodes.last().unwrap().0;
    let cfg = stream(&topo, 1, dst, secs);
    let mut sim = Simulator::new(topo, SimConfig::new(seed)).unwrap();
    if secure {
        let (a, b) = secured(cfg.src, cfg.dst);
        sim.set_security(1, a).unwrap();
        sim.set_security(dst, b).unwrap();
    }
    sim.add_stream(cfg).unwrap();
    sim.run_until(WARMUP + (secs + 1) * SECOND_US);
    sim.finish()
}

fn drops(r: &SimResult, cause: DropCause) -> u64 {
    r.streams[0].drops.get(&cause).copied().unwrap_or(0)
}

#[test]
fn empty_network_has_empty_trace() {
    let mut sim = Simulator::new(Topology::new(), SimConfig::new(1)).unwrap();
    sim.run_until(60 * SECOND_US);
    let r = sim.finish();
    assert!(r.trace.is_empty());
    r.check_invariants().unwrap();
}

#[test]
fn single_hop_plain_delivers_everything() {
    let r = run(Topology::single_hop(), 3, false, 10);
    r.check_invariants().unwrap();
    let s = &r.streams[0];
    assert_eq!((s.sent, s.received, s.dropped()), (250, 250, 0));
    let (send, recv) = r.stream_times(0);
    let sent: BTreeSet<u64> = send.iter().map(|x| x.0).collect();
    let got: BTreeSet<u64> = recv.iter().map(|x| x.0).collect();
    assert_eq!(sent, got);
    // 1344 bytes at 6 Mbit/s = 1792 us, plus 5 us propagation, no crypto
    assert!(r.deliveries.iter().all(|d| d.delay_us() == 1797));
}

#[test]
fn secured_chain_goes_through_forwarder() {
    let r = run(Topology::multi_hop(), 5, true, 10);
    r.check_invariants().unwrap();
    assert_eq!(r.streams[0].received, 250);
    let fwd = r
        .trace
        .iter()
        .filter(|e| e.action == Action::Fwd && e.node == 2 && e.stamp.is_some())
        .count();
    assert_eq!(fwd, 250);
    let d = &r.deliveries[0];
    assert_eq!(d.hops.len(), 3);
    assert_eq!(d.hops[1].processing_us, DEFAULT_FORWARD_US);
    // 1316 + 8 UDP -> ESP pad 2, +2 trailer, +16 IV, +8 header -> 1352; +24 AH +20 IP = 1396
    let wire = r.trace.iter().find(|e| e.action == Action::Tx && e.stamp.is_some()).unwrap();
    assert_eq!((wire.protocol, wire.bytes), (Protocol::Ah, 1396));
    assert_eq!(d.hops[0].serialization_us, LinkParams::default().serialization_us(1396));
    assert_eq!(d.delay_us(), d.hops.iter().map(HopCost::total).sum::<u64>());
    assert_eq!(r.counters[&2].fwd_packets, 250);
}

#[test]
fn same_seed_same_trace_other_seed_other_ivs() {
    let a = run(Topology::multi_hop(), 7, true, 4);
    let b = run(Topology::multi_hop(), 7, true, 4);
    assert_eq!(a.trace_hash, b.trace_hash);
    assert_eq!(a.trace_text(), b.trace_text());
    let mut c_sim = {
        let topo = Topology::multi_hop();
        let cfg = stream(&topo, 1, 3, 4);
        let mut cfg_sim = SimConfig::new(8);
        cfg_sim.capture_hex = true;
        let mut s = Simulator::new(topo, cfg_sim).unwrap();
        let (x, y) = secured(cfg.src, cfg.dst);
        s.set_security(1, x).unwrap();
        s.set_security(3, y).unwrap();
        s.add_stream(cfg).unwrap();
        s
    };
    c_sim.run_until(WARMUP + 5 * SECOND_US);
    let c = c_sim.finish();
    assert_eq!(a.dump_routes(), c.dump_routes());
    assert_ne!(a.trace_hash, c.trace_hash);
    assert!(!c.hex.is_empty());
}

#[test]
fn ttl_expires_at_forwarder() {
    let topo = Topology::multi_hop();
    let (src, dst) = (topo.address(1).unwrap(), topo.address(3).unwrap());
    let mut sim = Simulator::new(topo, SimConfig::new(1)).unwrap();
    let p = Packet::new(src, dst, 1, Transport::Udp(UdpPayload { src_port: 1, dst_port: 2, body: vec![0; 40] }));
    sim.inject(WARMUP, 1, p).unwrap();
    sim.run_until(WARMUP + SECOND_US);
    let r = sim.finish();
    assert_eq!(r.counters[&2].drops.get(&DropCause::TtlExpired), Some(&1));
}

#[test]
fn unknown_destination_has_no_route() {
    let topo = Topology::multi_hop();
    let src = topo.address(1).unwrap();
    let mut sim = Simulator::new(topo, SimConfig::new(1)).unwrap();
    let p = Packet::udp(src, Address::new(10, 9, 9, 9), UdpPayload { src_port: 1, dst_port: 2, body: vec![] });
    sim.inject(WARMUP, 1, p).unwrap();
    sim.run_until(WARMUP + SECOND_US);
    assert_eq!(sim.finish().counters[&1].drops.get(&DropCause::NoRoute), Some(&1));
}

#[test]
fn stream_before_convergence_is_dropped_not_lost() {
    let topo = Topology::multi_hop();
    let mut cfg = stream(&topo, 1, 3, 2);
    cfg.start_us = 0;
    let mut sim = Simulator::new(topo, SimConfig::new(2)).unwrap();
    sim.add_stream(cfg).unwrap();
    sim.run_until(SECOND_US);
    let r = sim.finish();
    r.check_invariants().unwrap();
    assert!(drops(&r, DropCause::NoRoute) > 0);
    assert!(r.streams[0].in_flight <= 1);
}

#[test]
fn forwarder_filter_blocks_ipsec() {
    let topo = Topology::multi_hop();
    let dst = 3;
    let cfg = stream(&topo, 1, dst, 4);
    let mut sim = Simulator::new(topo, SimConfig::new(4)).unwrap();
    let (a, b) = secured(cfg.src, cfg.dst);
    sim.set_security(1, a).unwrap();
    sim.set_security(dst, b).unwrap();
    let only: ProtocolSet = "udp,olsr".parse().unwrap();
    sim.set_filter(2, ProtocolFilter::allow(only)).unwrap();
    sim.add_stream(cfg).unwrap();
    sim.run_until(WARMUP + 5 * SECOND_US);
    let r = sim.finish();
    r.check_invariants().unwrap();
    assert_eq!(r.streams[0].received, 0);
    assert_eq!(drops(&r, DropCause::Filtered), 100);
}

#[test]
fn receiver_without_keys_rejects() {
    let topo = Topology::single_hop();
    let cfg = stream(&topo, 1, 2, 1);
    let mut sim = Simulator::new(topo, SimConfig::new(4)).unwrap();
    sim.set_security(1, secured(cfg.src, cfg.dst).0).unwrap();
    sim.add_stream(cfg).unwrap();
    sim.run_until(WARMUP + 2 * SECOND_US);
    let r = sim.finish();
    r.check_invariants().unwrap();
    assert_eq!(drops(&r, DropCause::Security(Reject::NoSa)), 25);
}

#[test]
fn lossy_link_still_conserves() {
    let mut topo = Topology::single_hop();
    topo.links.values_mut().for_each(|l| l.loss = 0.2);
    let r = run(topo, 9, true, 10);
    r.check_invariants().unwrap();
    let s = &r.streams[0];
    assert!(drops(&r, DropCause::Loss) > 0);
    assert_eq!(s.sent, s.received + drops(&r, DropCause::Loss) + s.in_flight);
}

#[test]
fn zero_bandwidth_rejected() {
    let mut t = Topology::new();
    t.add_node(1, Address::new(10, 0, 0, 1)).unwrap();
    t.add_node(2, Address::new(10, 0, 0, 2)).unwrap();
    let p = LinkParams {
        bandwidth_bps: 0,
        ..LinkParams::default()
    };
    assert!(matches!(t.add_link(1, 2, p), Err(SimError::Config(_))));
}

fn random_graph(rng: &mut ChaCha8Rng, n: u32) -> Topology {
    let mut t = Topology::new();
    for i in 1..=n {
        t.add_node(i, Address::new(10, 0, 1, i as u8)).unwrap();
    }
    for i in 2..=n {
        let parent = rng.gen_range(1..i);
        t.add_link(parent, i, LinkParams::default()).unwrap();
    }
    for a in 1..=n {
        for b in a + 1..=n {
            if rng.gen_bool(0.15) {
                t.add_link(a, b, LinkParams::default()).unwrap();
            }
        }
    }
    t
}

fn bfs(t: &Topology, from: NodeId) -> BTreeMap<NodeId, u32> {
    let mut dist = BTreeMap::from([(from, 0)]);
    let mut q = VecDeque::from([from]);
    while let Some(x) = q.pop_front() {
        for y in t.neighbors(x) {
            if !dist.contains_key(&y) {
                dist.insert(y, dist[&x] + 1);
                q.push_back(y);
            }
        }
    }
    dist.remove(&from);
    dist
}

/// Smallest subset of `n1` whose neighborhoods cover `n2`.
fn min_cover(t: &Topology, n1: &[NodeId], n2: &BTreeSet<NodeId>) -> usize {
    (0u32..1 << n1.len())
        .filter(|mask| {
            let covered: BTreeSet<NodeId> = n1
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .flat_map(|(_, m)| t.neighbors(*m))
                .collect();
            n2.is_subset(&covered)
        })
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

#[test]
fn olsr_converges_to_bfs_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..20 {
        let n = rng.gen_range(2..=12);
        let topo = random_graph(&mut rng, n);
        let mut sim = Simulator::new(topo.clone(), SimConfig::new(round)).unwrap();
        sim.run_until(19 * SECOND_US);
        for &(id, _) in &topo.nodes {
            let node = sim.olsr(id).unwrap();
            let got: BTreeMap<NodeId, u32> = node
                .routes
                .entries
                .iter()
                .map(|(a, r)| (topo.node_by_address(*a).unwrap(), r.hops))
                .collect();
            assert_eq!(got, bfs(&topo, id), "round {round} node {id}");

            let n1 = topo.neighbors(id);
            let n2: BTreeSet<NodeId> = bfs(&topo, id).into_iter().filter(|(_, d)| *d == 2).map(|(x, _)| x).collect();
            let mprs: Vec<NodeId> = node.mprs.iter().map(|a| topo.node_by_address(*a).unwrap()).collect();
            let covered: BTreeSet<NodeId> = mprs.iter().flat_map(|m| topo.neighbors(*m)).collect();
            assert!(n2.is_subset(&covered), "round {round} node {id}: MPRs do not cover");
            assert!(mprs.iter().all(|m| n1.contains(m)));
            assert!(mprs.len() <= 2 * min_cover(&topo, &n1, &n2).max(1));
        }
    }
}

#[test]
fn mpr_flooding_relays_less_than_naive() {
    // ring of 8 with chords
    let mut topo = Topology::new();
    for i in 1..=8 {
        topo.add_node(i, Address::new(10, 0, 2, i as u8)).unwrap();
    }
    for i in 1..=8u32 {
        topo.add_link(i, i % 8 + 1, LinkParams::default()).unwrap();
    }
    for (a, b) in [(1, 5), (2, 6), (3, 7)] {
        topo.add_link(a, b, LinkParams::default()).unwrap();
    }
    let relayed = |mode| {
        let mut cfg = SimConfig::new(3);
        cfg.olsr.flood = mode;
        let mut sim = Simulator::new(topo.clone(), cfg).unwrap();
        sim.run_until(120 * SECOND_US);
        let r = sim.finish();
        r.olsr_stats.values().map(|s| s.tc_relayed).sum::<u64>()
    };
    let (mpr, naive) = (relayed(FloodMode::Mpr), relayed(FloodMode::Naive));
    assert!(mpr > 0);
    assert!(mpr < naive, "mpr {mpr} naive {naive}");
}
