use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::wire::Address;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub next_hop: Address,
    pub hops: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingTable {
    pub entries: BTreeMap<Address, Route>,
}

impl RoutingTable {
    pub fn lookup(&self, dst: Address) -> Option<Route> {
        self.entries.get(&dst).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hop_counts(&self) -> BTreeMap<Address, u32> {
        self.entries.iter().map(|(d, r)| (*d, r.hops)).collect()
    }
}

impl fmt::Display for RoutingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (dst, r) in &self.entries {
            writeln!(f, "{dst} {} {}", r.next_hop, r.hops)?;
        }
        Ok(())
    }
}

/// Hop-count shortest paths over symmetric one-hop links, two-hop
/// information and advertised topology edges (`last -> dest`).
///
/// Breadth-first in address order, so equal-cost ties go to the lowest
/// next hop.
pub fn compute_routes(
    me: Address,
    neighbors: &BTreeSet<Address>,
    two_hop: &BTreeMap<Address, BTreeSet<Address>>,
    topology: &BTreeMap<Address, BTreeSet<Address>>,
) -> RoutingTable {
    let mut table = RoutingTable::default();
    let mut queue = VecDeque::new();
    for n in neighbors {
        if *n != me {
            table.entries.insert(*n, Route { next_hop: *n, hops: 1 });
            queue.push_back(*n);
        }
    }
    while let Some(node) = queue.pop_front() {
        let route = table.entries[&node];
        let local = if route.hops == 1 { two_hop.get(&node) } else { None };
        let next: BTreeSet<Address> = local
            .into_iter()
            .flatten()
            .chain(topology.get(&node).into_iter().flatten())
            .copied()
            .collect();
        for dest in next {
            if dest == me || table.entries.contains_key(&dest) {
                continue;
            }
            table.entries.insert(
                dest,
                Route {
                    next_hop: route.next_hop,
                    hops: route.hops + 1,
                },
            );
            queue.push_back(dest);
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: u8) -> Address {
        Address::new(10, 0, 0, n)
    }

    #[test]
    fn chain_via_two_hop() {
        let neighbors = [a(2)].into();
        let two = [(a(2), [a(1), a(3)].into())].into();
        let t = compute_routes(a(1), &neighbors, &two, &BTreeMap::new());
        assert_eq!(t.lookup(a(2)), Some(Route { next_hop: a(2), hops: 1 }));
        assert_eq!(t.lookup(a(3)), Some(Route { next_hop: a(2), hops: 2 }));
        assert_eq!(t.lookup(a(1)), None);
        assert_eq!(t.to_string(), "10.0.0.2 10.0.0.2 1\n10.0.0.3 10.0.0.2 2\n");
    }

    #[test]
    fn topology_extends_reach() {
        let neighbors = [a(2)].into();
        let two = [(a(2), [a(3)].into())].into();
        let topo = [(a(3), [a(4)].into()), (a(4), [a(5), a(3)].into())].into();
        let t = compute_routes(a(1), &neighbors, &two, &topo);
        assert_eq!(t.lookup(a(5)).unwrap().hops, 4);
        assert_eq!(t.lookup(a(5)).unwrap().next_hop, a(2));
    }
}
