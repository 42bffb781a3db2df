use std::fmt;
use std::str::FromStr;

use crate::wire::Protocol;

/// Small set of outer protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ProtocolSet(u8);

impl ProtocolSet {
    pub const EMPTY: ProtocolSet = ProtocolSet(0);
    pub const ALL: ProtocolSet = ProtocolSet(0b1111);

    fn bit(p: Protocol) -> u8 {
        match p {
            Protocol::Udp => 1,
            Protocol::Esp => 2,
            Protocol::Ah => 4,
            Protocol::Olsr => 8,
        }
    }

    pub fn with(mut self, p: Protocol) -> Self {
        self.0 |= Self::bit(p);
        self
    }

    pub fn without(mut self, p: Protocol) -> Self {
        self.0 &= !Self::bit(p);
        self
    }

    pub fn contains(self, p: Protocol) -> bool {
        self.0 & Self::bit(p) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Protocol> {
        Protocol::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl FromIterator<Protocol> for ProtocolSet {
    fn from_iter<I: IntoIterator<Item = Protocol>>(iter: I) -> Self {
        iter.into_iter().fold(ProtocolSet::EMPTY, ProtocolSet::with)
    }
}

impl fmt::Display for ProtocolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Protocol::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for ProtocolSet {
    type Err = String;

    /// Comma-separated protocol names, or `all` / `none`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "all" => Ok(ProtocolSet::ALL),
            "none" | "" => Ok(ProtocolSet::EMPTY),
            list => list.split(',').map(|p| p.trim().parse::<Protocol>()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterChain {
    Input,
    Output,
    Forward,
}

/// Per-node accept lists for the three packet roles. Anything whose outer
/// protocol is not listed for the role is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolFilter {
    pub input: ProtocolSet,
    pub output: ProtocolSet,
    pub forward: ProtocolSet,
}

impl Default for ProtocolFilter {
    fn default() -> Self {
        ProtocolFilter::allow(ProtocolSet::ALL)
    }
}

impl ProtocolFilter {
    /// Same accept list in all three chains.
    pub fn allow(set: ProtocolSet) -> Self {
        ProtocolFilter {
            input: set,
            output: set,
            forward: set,
        }
    }

    pub fn permits(&self, chain: FilterChain, protocol: Protocol) -> bool {
        match chain {
            FilterChain::Input => self.input.contains(protocol),
            FilterChain::Output => self.output.contains(protocol),
            FilterChain::Forward => self.forward.contains(protocol),
        }
    }
}
