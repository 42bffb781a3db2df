use std::collections::{BTreeMap, BTreeSet};

use crate::wire::Address;

/// Greedy multipoint relay selection.
///
/// `two_hop` maps each symmetric one-hop neighbor to the addresses it reports
/// as its own symmetric neighbors. Strict two-hop neighbors are those
/// addresses that are neither `me` nor one-hop neighbors.
///
/// Neighbors that are the only path to some two-hop node are taken first.
/// The rest are picked by how many still-uncovered two-hop nodes they reach,
/// then by degree, then by lower address.
pub fn select_mprs(
    me: Address,
    neighbors: &BTreeSet<Address>,
    two_hop: &BTreeMap<Address, BTreeSet<Address>>,
) -> BTreeSet<Address> {
    let strict = |a: &Address| *a != me && !neighbors.contains(a);
    let reach: BTreeMap<Address, BTreeSet<Address>> = neighbors
        .iter()
        .map(|n| {
            let covered = two_hop
                .get(n)
                .map(|s| s.iter().copied().filter(strict).collect())
                .unwrap_or_default();
            (*n, covered)
        })
        .collect();
    let mut uncovered: BTreeSet<Address> = reach.values().flatten().copied().collect();
    let mut mprs = BTreeSet::new();

    for target in uncovered.clone() {
        let mut providers = reach.iter().filter(|(_, c)| c.contains(&target));
        if let (Some((only, _)), None) = (providers.next(), providers.next()) {
            mprs.insert(*only);
        }
    }
    for m in &mprs {
        for c in &reach[m] {
            uncovered.remove(c);
        }
    }

    while !uncovered.is_empty() {
        let best = reach
            .iter()
            .filter(|(n, _)| !mprs.contains(*n))
            .map(|(n, c)| (c.intersection(&uncovered).count(), c.len(), *n))
            .filter(|(r, _, _)| *r > 0)
            // max reach, then max degree, then min address
            .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(b.2.cmp(&a.2)));
        let Some((_, _, pick)) = best else { break };
        for c in &reach[&pick] {
            uncovered.remove(c);
        }
        mprs.insert(pick);
    }
    mprs
}
