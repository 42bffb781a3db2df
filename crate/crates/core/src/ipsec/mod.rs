//! Transport-mode IPsec: security association and policy databases, the
//! setkey configuration dialect, the AH/ESP engine and per-node protocol
//! filtering.

mod engine;
mod filter;
pub mod setkey;

use std::fmt;

use thiserror::Error;

use crate::crypto::{Algorithm, AuthAlgorithm, CipherAlgorithm, CryptoError};
use crate::wire::{Address, Protocol, WireError};

pub use engine::{
    ah_icv_input, ah_seal, ah_verify, esp_open, esp_pad_len, esp_seal, inbound, outbound, CostMeter, Reject,
};
pub use filter::{FilterChain, ProtocolFilter, ProtocolSet};
pub use setkey::{parse_setkey, render_setkey, SetkeyError, SetkeyErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IpsecProtocol {
    Ah,
    Esp,
}

impl IpsecProtocol {
    pub fn name(self) -> &'static str {
        match self {
            IpsecProtocol::Ah => "ah",
            IpsecProtocol::Esp => "esp",
        }
    }

    pub fn wire(self) -> Protocol {
        match self {
            IpsecProtocol::Ah => Protocol::Ah,
            IpsecProtocol::Esp => Protocol::Esp,
        }
    }
}

impl fmt::Display for IpsecProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IpsecError {
    #[error("{protocol} SA cannot use {algorithm}")]
    AlgorithmMismatch {
        protocol: IpsecProtocol,
        algorithm: Algorithm,
    },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("duplicate SA for dst {dst} spi 0x{spi:x} {protocol}")]
    DuplicateSa {
        dst: Address,
        spi: u32,
        protocol: IpsecProtocol,
    },
    #[error("policy {src} -> {dst} requires {protocol} but no SA exists")]
    NoSaForPolicy {
        src: Address,
        dst: Address,
        protocol: IpsecProtocol,
    },
    #[error("operation needs a {expected} SA, got {actual}")]
    WrongSaProtocol {
        expected: IpsecProtocol,
        actual: IpsecProtocol,
    },
    #[error("packet layout not valid for this transform: {0}")]
    Layout(&'static str),
    #[error("sequence number space exhausted for spi 0x{0:x}")]
    SequenceExhausted(u32),
}

/// One simplex security association.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityAssociation {
    pub src: Address,
    pub dst: Address,
    pub protocol: IpsecProtocol,
    pub spi: u32,
    pub algorithm: Algorithm,
    pub key: Vec<u8>,
    pub tx_sequence: u32,
    pub rx_highest_seen: u32,
}

impl SecurityAssociation {
    pub fn new(
        src: Address,
        dst: Address,
        protocol: IpsecProtocol,
        spi: u32,
        algorithm: Algorithm,
        key: Vec<u8>,
    ) -> Result<Self, IpsecError> {
        match (protocol, algorithm) {
            (IpsecProtocol::Ah, Algorithm::Auth(a)) => a.validate_key(&key)?,
            (IpsecProtocol::Esp, Algorithm::Cipher(c)) => c.validate_key(&key)?,
            _ => return Err(IpsecError::AlgorithmMismatch { protocol, algorithm }),
        }
        Ok(SecurityAssociation {
            src,
            dst,
            protocol,
            spi,
            algorithm,
            key,
            tx_sequence: 0,
            rx_highest_seen: 0,
        })
    }

    pub fn ah(src: Address, dst: Address, spi: u32, alg: AuthAlgorithm, key: Vec<u8>) -> Result<Self, IpsecError> {
        Self::new(src, dst, IpsecProtocol::Ah, spi, Algorithm::Auth(alg), key)
    }

    pub fn esp(src: Address, dst: Address, spi: u32, alg: CipherAlgorithm, key: Vec<u8>) -> Result<Self, IpsecError> {
        Self::new(src, dst, IpsecProtocol::Esp, spi, Algorithm::Cipher(alg), key)
    }

    pub fn auth_algorithm(&self) -> Option<AuthAlgorithm> {
        match self.algorithm {
            Algorithm::Auth(a) => Some(a),
            Algorithm::Cipher(_) => None,
        }
    }

    pub fn cipher_algorithm(&self) -> Option<CipherAlgorithm> {
        match self.algorithm {
            Algorithm::Cipher(c) => Some(c),
            Algorithm::Auth(_) => None,
        }
    }

    fn next_tx_sequence(&mut self) -> Result<u32, IpsecError> {
        self.tx_sequence = self
            .tx_sequence
            .checked_add(1)
            .ok_or(IpsecError::SequenceExhausted(self.spi))?;
        Ok(self.tx_sequence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyDirection {
    In,
    Out,
}

impl PolicyDirection {
    pub fn name(self) -> &'static str {
        match self {
            PolicyDirection::In => "in",
            PolicyDirection::Out => "out",
        }
    }
}

/// Host-to-host policy. Every transform is `<proto>/transport//require`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityPolicy {
    pub selector_src: Address,
    pub selector_dst: Address,
    pub direction: PolicyDirection,
    pub transforms: Vec<IpsecProtocol>,
}

impl SecurityPolicy {
    pub fn matches(&self, direction: PolicyDirection, src: Address, dst: Address) -> bool {
        self.direction == direction && self.selector_src == src && self.selector_dst == dst
    }

    pub fn requires(&self, protocol: IpsecProtocol) -> bool {
        self.transforms.contains(&protocol)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SecurityDatabases {
    pub sad: Vec<SecurityAssociation>,
    pub spd: Vec<SecurityPolicy>,
}

impl SecurityDatabases {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn flush(&mut self) {
        self.sad.clear();
    }

    pub fn spdflush(&mut self) {
        self.spd.clear();
    }

    pub fn add_sa(&mut self, sa: SecurityAssociation) -> Result<(), IpsecError> {
        if self.find_sa(sa.dst, sa.spi, sa.protocol).is_some() {
            return Err(IpsecError::DuplicateSa {
                dst: sa.dst,
                spi: sa.spi,
                protocol: sa.protocol,
            });
        }
        self.sad.push(sa);
        Ok(())
    }

    pub fn add_policy(&mut self, policy: SecurityPolicy) {
        self.spd.push(policy);
    }

    pub fn find_sa(&self, dst: Address, spi: u32, protocol: IpsecProtocol) -> Option<&SecurityAssociation> {
        self.sad
            .iter()
            .find(|sa| sa.dst == dst && sa.spi == spi && sa.protocol == protocol)
    }

    pub fn find_sa_mut(&mut self, dst: Address, spi: u32, protocol: IpsecProtocol) -> Option<&mut SecurityAssociation> {
        self.sad
            .iter_mut()
            .find(|sa| sa.dst == dst && sa.spi == spi && sa.protocol == protocol)
    }

    /// The SA used to protect outgoing traffic between two hosts.
    pub fn outbound_sa_mut(
        &mut self,
        src: Address,
        dst: Address,
        protocol: IpsecProtocol,
    ) -> Option<&mut SecurityAssociation> {
        self.sad
            .iter_mut()
            .find(|sa| sa.src == src && sa.dst == dst && sa.protocol == protocol)
    }

    /// First matching policy in file order.
    pub fn policy(&self, direction: PolicyDirection, src: Address, dst: Address) -> Option<&SecurityPolicy> {
        self.spd.iter().find(|p| p.matches(direction, src, dst))
    }

    /// Host-to-host transport configuration as seen from `local`: SPIs
    /// 0x200/0x201 (AH/ESP) for traffic from `peer`, 0x300/0x301 towards it.
    /// Each protocol takes (algorithm, inbound key, outbound key). Both
    /// `None` gives empty databases.
    pub fn host_to_host(
        local: Address,
        peer: Address,
        esp: Option<(CipherAlgorithm, Vec<u8>, Vec<u8>)>,
        ah: Option<(AuthAlgorithm, Vec<u8>, Vec<u8>)>,
    ) -> Result<Self, IpsecError> {
        let mut dbs = SecurityDatabases::new();
        let mut transforms = Vec::new();
        if let Some((alg, key_in, key_out)) = ah {
            dbs.add_sa(SecurityAssociation::ah(peer, local, 0x200, alg, key_in)?)?;
            dbs.add_sa(SecurityAssociation::ah(local, peer, 0x300, alg, key_out)?)?;
        }
        if let Some((alg, key_in, key_out)) = esp {
            dbs.add_sa(SecurityAssociation::esp(peer, local, 0x201, alg, key_in)?)?;
            dbs.add_sa(SecurityAssociation::esp(local, peer, 0x301, alg, key_out)?)?;
            transforms.push(IpsecProtocol::Esp);
        }
        if dbs.find_sa(local, 0x200, IpsecProtocol::Ah).is_some() {
            transforms.push(IpsecProtocol::Ah);
        }
        if !transforms.is_empty() {
            for (direction, src, dst) in [(PolicyDirection::In, peer, local), (PolicyDirection::Out, local, peer)] {
                dbs.add_policy(SecurityPolicy {
                    selector_src: src,
                    selector_dst: dst,
                    direction,
                    transforms: transforms.clone(),
                });
            }
        }
        Ok(dbs)
    }

    /// Same SAs with every policy direction flipped: the peer's view of a
    /// host-to-host configuration.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for sa in &mut out.sad {
            sa.tx_sequence = 0;
            sa.rx_highest_seen = 0;
        }
        for p in &mut out.spd {
            p.direction = match p.direction {
                PolicyDirection::In => PolicyDirection::Out,
                PolicyDirection::Out => PolicyDirection::In,
            };
        }
        out
    }
}
