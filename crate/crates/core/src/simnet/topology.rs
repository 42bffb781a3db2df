use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::SimError;
use crate::wire::Address;

pub type NodeId = u32;

pub const DEFAULT_BANDWIDTH_BPS: u64 = 6_000_000;
pub const DEFAULT_PROPAGATION_US: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub bandwidth_bps: u64,
    pub propagation_us: u64,
    /// Independent per-packet loss probability; zero unless configured.
    pub loss: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            propagation_us: DEFAULT_PROPAGATION_US,
            loss: 0.0,
        }
    }
}

impl LinkParams {
    /// Serialization time, rounded up to whole microseconds.
    pub fn serialization_us(&self, bytes: usize) -> u64 {
        (bytes as u64 * 8 * 1_000_000).div_ceil(self.bandwidth_bps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<(NodeId, Address)>,
    /// Keyed by (lower id, higher id); links are symmetric.
    pub links: BTreeMap<(NodeId, NodeId), LinkParams>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl Topology {
    pub fn new() -> Self {
        Topology {
            nodes: Vec::new(),
            links: BTreeMap::new(),
        }
    }

    pub fn add_node(&mut self, id: NodeId, addr: Address) -> Result<(), SimError> {
        if self.nodes.iter().any(|(i, _)| *i == id) {
            return Err(SimError::Config(format!("duplicate node id {id}")));
        }
        if self.nodes.iter().any(|(_, a)| *a == addr) {
            return Err(SimError::Config(format!("duplicate address {addr}")));
        }
        if addr.is_broadcast() {
            return Err(SimError::Config("broadcast address cannot be a node".into()));
        }
        self.nodes.push((id, addr));
        Ok(())
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId, params: LinkParams) -> Result<(), SimError> {
        if a == b {
            return Err(SimError::Config(format!("self-link on node {a}")));
        }
        for n in [a, b] {
            if self.address(n).is_none() {
                return Err(SimError::Config(format!("link references unknown node {n}")));
            }
        }
        if params.bandwidth_bps == 0 {
            return Err(SimError::Config(format!("link {a}-{b} has zero bandwidth")));
        }
        if !(0.0..=1.0).contains(&params.loss) {
            return Err(SimError::Config(format!("link {a}-{b} loss must be in [0, 1]")));
        }
        self.links.insert(key(a, b), params);
        Ok(())
    }

    pub fn address(&self, id: NodeId) -> Option<Address> {
        self.nodes.iter().find(|(i, _)| *i == id).map(|(_, a)| *a)
    }

    pub fn node_by_address(&self, addr: Address) -> Option<NodeId> {
        self.nodes.iter().find(|(_, a)| *a == addr).map(|(i, _)| *i)
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<&LinkParams> {
        self.links.get(&key(a, b))
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        self.links
            .keys()
            .filter_map(|&(x, y)| {
                if x == id {
                    Some(y)
                } else if y == id {
                    Some(x)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Two nodes in range: 192.168.2.12 and 192.168.2.22.
    pub fn single_hop() -> Self {
        let mut t = Topology::new();
        t.add_node(1, Address::new(192, 168, 2, 12)).unwrap();
        t.add_node(2, Address::new(192, 168, 2, 22)).unwrap();
        t.add_link(1, 2, LinkParams::default()).unwrap();
        t
    }

    /// Three-node chain 192.168.2.12 - 192.168.2.2 - 192.168.2.22.
    pub fn multi_hop() -> Self {
        let mut t = Topology::new();
        t.add_node(1, Address::new(192, 168, 2, 12)).unwrap();
        t.add_node(2, Address::new(192, 168, 2, 2)).unwrap();
        t.add_node(3, Address::new(192, 168, 2, 22)).unwrap();
        t.add_link(1, 2, LinkParams::default()).unwrap();
        t.add_link(2, 3, LinkParams::default()).unwrap();
        t
    }

    /// Parses `node <id> <address>` and `link <id> <id> [bandwidth_bps] [prop_us]`
    /// lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut t = Topology::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Config(format!("topology line {}: {msg}", lineno + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| err(format!("bad {what} '{s}'")));
            match f.as_slice() {
                ["node", id, addr] => {
                    let id = num(id, "node id")? as NodeId;
                    let addr = addr.parse().map_err(|_| err(format!("bad address '{addr}'")))?;
                    t.add_node(id, addr).map_err(|e| err(e.to_string()))?;
                }
                ["link", a, b, rest @ ..] if rest.len() <= 2 => {
                    let mut p = LinkParams::default();
                    if let Some(bw) = rest.first() {
                        p.bandwidth_bps = num(bw, "bandwidth")?;
                    }
                    if let Some(prop) = rest.get(1) {
                        p.propagation_us = num(prop, "propagation delay")?;
                    }
                    let (a, b) = (num(a, "node id")? as NodeId, num(b, "node id")? as NodeId);
                    t.add_link(a, b, p).map_err(|e| err(e.to_string()))?;
                }
                _ => return Err(err(format!("unrecognized statement '{line}'"))),
            }
        }
        Ok(t)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (id, addr) in &self.nodes {
            let _ = writeln!(out, "node {id} {addr}");
        }
        for ((a, b), p) in &self.links {
            let _ = writeln!(out, "link {a} {b} {} {}", p.bandwidth_bps, p.propagation_us);
        }
        out
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let text = "# chain\nnode 1 192.168.2.12\nnode 2 192.168.2.2\nnode 3 192.168.2.22\nlink 1 2\nlink 3 2 11000000 7\n";
        let t = Topology::parse(text).unwrap();
        assert_eq!(t.link(2, 3).unwrap().bandwidth_bps, 11_000_000);
        assert_eq!(t.link(3, 2).unwrap().propagation_us, 7);
        assert_eq!(t.link(1, 2).unwrap().bandwidth_bps, DEFAULT_BANDWIDTH_BPS);
        assert_eq!(t.link(1, 3), None);
        assert_eq!(Topology::parse(&t.render()).unwrap(), t);
        assert_eq!(Topology::parse(&Topology::multi_hop().render()).unwrap(), Topology::multi_hop());
    }

    #[test]
    fn config_errors() {
        for bad in [
            "node 1 10.0.0.1\nnode 2 10.0.0.2\nlink 1 2 0\n",
            "node 1 10.0.0.1\nnode 1 10.0.0.2\n",
            "node 1 10.0.0.1\nnode 2 10.0.0.1\n",
            "node 1 10.0.0.1\nlink 1 9\n",
            "node 1 10.0.0.1\nlink 1 1\n",
            "nodes 1 10.0.0.1\n",
            "node x 10.0.0.1\n",
        ] {
            assert!(matches!(Topology::parse(bad), Err(SimError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn serialization_delay() {
        let p = LinkParams::default();
        // 1352 * 8 / 6e6 s = 1802.67 us, rounded up
        assert_eq!(p.serialization_us(1352), 1803);
        assert_eq!(p.serialization_us(750), 1000);
    }

    #[test]
    fn presets() {
        let s = Topology::single_hop();
        assert_eq!(s.neighbors(1), vec![2]);
        let m = Topology::multi_hop();
        assert_eq!(m.neighbors(2), vec![1, 3]);
        assert_eq!(m.address(2), Some(Address::new(192, 168, 2, 2)));
    }
}
