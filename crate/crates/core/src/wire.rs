//! On-wire packet layout.
//!
//! ```text
//! +-----------+--------------+----------------------+----------------------+
//! | NetHeader | AhHeader     | EspEnvelope          | Transport            |
//! | 20 bytes  | 24 bytes opt | 8 + IV + ct, opt     | UDP or OLSR, absent  |
//! |           |              |                      | when ESP encloses it |
//! +-----------+--------------+----------------------+----------------------+
//! ```
//!
//! The network header is a fixed 20-byte IPv4-like header with no options or
//! fragmentation. Checksums are always zero; integrity comes from AH only.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

use crate::crypto::{Icv, ICV_LEN};

pub const NET_HEADER_LEN: usize = 20;
pub const AH_LEN: usize = 24;
pub const ESP_HEADER_LEN: usize = 8;
pub const UDP_HEADER_LEN: usize = 8;
/// stream_id (4) + packet_id (8) at the front of a stamped UDP body.
pub const STAMP_LEN: usize = 12;
pub const DEFAULT_TTL: u8 = 64;

/// Offset of the TTL byte within the network header.
pub const TTL_OFFSET: usize = 8;
/// Offset of the ICV within an AH header.
pub const AH_ICV_OFFSET: usize = 12;
/// AH payload length code: header length in 32-bit words minus two.
const AH_LEN_CODE: u8 = (AH_LEN / 4 - 2) as u8;
const VERSION_IHL: u8 = 0x45;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated: needed {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("unknown protocol code {0}")]
    UnknownProtocol(u8),
    #[error("bad header: {0}")]
    BadHeader(&'static str),
    #[error("length field says {declared} bytes, buffer has {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("inconsistent layer chain: {0}")]
    Inconsistent(&'static str),
    #[error("packet of {0} bytes exceeds the 16-bit length field")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub u32);

impl Address {
    pub const BROADCAST: Address = Address(u32::MAX);

    pub fn new(a: u8, b: u8, c: u8, d: u8) -> Self {
        Address(u32::from_be_bytes([a, b, c, d]))
    }

    pub fn octets(self) -> [u8; 4] {
        self.0.to_be_bytes()
    }

    pub fn is_broadcast(self) -> bool {
        self == Self::BROADCAST
    }
}

impl From<Ipv4Addr> for Address {
    fn from(ip: Ipv4Addr) -> Self {
        Address(u32::from(ip))
    }
}

impl From<Address> for Ipv4Addr {
    fn from(a: Address) -> Self {
        Ipv4Addr::from(a.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Ipv4Addr::from(*self).fmt(f)
    }
}

impl FromStr for Address {
    type Err = std::net::AddrParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Ipv4Addr>().map(Address::from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Udp,
    Esp,
    Ah,
    Olsr,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Udp, Protocol::Esp, Protocol::Ah, Protocol::Olsr];

    /// IANA protocol numbers; OLSR uses the MANET protocol number.
    pub fn code(self) -> u8 {
        match self {
            Protocol::Udp => 17,
            Protocol::Esp => 50,
            Protocol::Ah => 51,
            Protocol::Olsr => 138,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, WireError> {
        match code {
            17 => Ok(Protocol::Udp),
            50 => Ok(Protocol::Esp),
            51 => Ok(Protocol::Ah),
            138 => Ok(Protocol::Olsr),
            other => Err(WireError::UnknownProtocol(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Udp => "udp",
            Protocol::Esp => "esp",
            Protocol::Ah => "ah",
            Protocol::Olsr => "olsr",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown protocol '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetHeader {
    pub src: Address,
    pub dst: Address,
    pub protocol: Protocol,
    pub ttl: u8,
    pub total_length: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AhHeader {
    pub next_protocol: Protocol,
    pub spi: u32,
    pub sequence: u32,
    pub icv: Icv,
}

/// ESP header plus the encrypted region. `data` is the IV followed by the
/// ciphertext; the split point depends on the SA's cipher and is only known
/// to the receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EspEnvelope {
    pub spi: u32,
    pub sequence: u32,
    pub data: Vec<u8>,
}

impl EspEnvelope {
    pub fn new(spi: u32, sequence: u32, iv: &[u8], ciphertext: &[u8]) -> Self {
        let mut data = Vec::with_capacity(iv.len() + ciphertext.len());
        data.extend_from_slice(iv);
        data.extend_from_slice(ciphertext);
        EspEnvelope { spi, sequence, data }
    }

    /// Splits `data` into (iv, ciphertext) for a cipher with the given IV size.
    pub fn split(&self, iv_len: usize) -> Option<(&[u8], &[u8])> {
        (self.data.len() >= iv_len).then(|| self.data.split_at(iv_len))
    }

    pub fn wire_len(&self) -> usize {
        ESP_HEADER_LEN + self.data.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamStamp {
    pub stream_id: u32,
    pub packet_id: u64,
}

impl StreamStamp {
    pub fn to_bytes(self) -> [u8; STAMP_LEN] {
        let mut b = [0u8; STAMP_LEN];
        b[..4].copy_from_slice(&self.stream_id.to_be_bytes());
        b[4..].copy_from_slice(&self.packet_id.to_be_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        if b.len() < STAMP_LEN {
            return None;
        }
        Some(StreamStamp {
            stream_id: u32::from_be_bytes(b[..4].try_into().unwrap()),
            packet_id: u64::from_be_bytes(b[4..12].try_into().unwrap()),
        })
    }
}

/// A UDP datagram. Stream traffic carries a [`StreamStamp`] in the first
/// twelve body bytes; shorter bodies are unstamped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdpPayload {
    pub src_port: u16,
    pub dst_port: u16,
    pub body: Vec<u8>,
}

impl UdpPayload {
    pub fn stamped(src_port: u16, dst_port: u16, stamp: StreamStamp, mut filler: Vec<u8>) -> Self {
        let mut body = stamp.to_bytes().to_vec();
        body.append(&mut filler);
        UdpPayload {
            src_port,
            dst_port,
            body,
        }
    }

    pub fn stamp(&self) -> Option<StreamStamp> {
        StreamStamp::from_bytes(&self.body)
    }

    pub fn wire_len(&self) -> usize {
        UDP_HEADER_LEN + self.body.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    Udp(UdpPayload),
    /// Encoded OLSR packet; see the `olsr` module for its layout.
    Olsr(Vec<u8>),
}

impl Transport {
    pub fn protocol(&self) -> Protocol {
        match self {
            Transport::Udp(_) => Protocol::Udp,
            Transport::Olsr(_) => Protocol::Olsr,
        }
    }

    pub fn wire_len(&self) -> usize {
        match self {
            Transport::Udp(u) => u.wire_len(),
            Transport::Olsr(b) => b.len(),
        }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        match self {
            Transport::Udp(u) => {
                out.extend_from_slice(&u.src_port.to_be_bytes());
                out.extend_from_slice(&u.dst_port.to_be_bytes());
                out.extend_from_slice(&(u.wire_len() as u16).to_be_bytes());
                out.extend_from_slice(&[0, 0]);
                out.extend_from_slice(&u.body);
            }
            Transport::Olsr(b) => out.extend_from_slice(b),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        self.encode(&mut out);
        out
    }

    pub fn decode(protocol: Protocol, bytes: &[u8]) -> Result<Self, WireError> {
        match protocol {
            Protocol::Udp => {
                need(bytes, UDP_HEADER_LEN)?;
                let len = u16::from_be_bytes([bytes[4], bytes[5]]) as usize;
                if len != bytes.len() {
                    return Err(WireError::LengthMismatch {
                        declared: len,
                        actual: bytes.len(),
                    });
                }
                if bytes[6..8] != [0, 0] {
                    return Err(WireError::BadHeader("nonzero UDP checksum"));
                }
                Ok(Transport::Udp(UdpPayload {
                    src_port: u16::from_be_bytes([bytes[0], bytes[1]]),
                    dst_port: u16::from_be_bytes([bytes[2], bytes[3]]),
                    body: bytes[UDP_HEADER_LEN..].to_vec(),
                }))
            }
            Protocol::Olsr => Ok(Transport::Olsr(bytes.to_vec())),
            Protocol::Ah | Protocol::Esp => Err(WireError::Inconsistent("transport cannot be AH or ESP")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub header: NetHeader,
    pub ah: Option<AhHeader>,
    pub esp: Option<EspEnvelope>,
    pub transport: Option<Transport>,
}

impl Packet {
    pub fn new(src: Address, dst: Address, ttl: u8, transport: Transport) -> Self {
        let mut p = Packet {
            header: NetHeader {
                src,
                dst,
                protocol: transport.protocol(),
                ttl,
                total_length: 0,
            },
            ah: None,
            esp: None,
            transport: Some(transport),
        };
        p.refresh_length();
        p
    }

    pub fn udp(src: Address, dst: Address, payload: UdpPayload) -> Self {
        Packet::new(src, dst, DEFAULT_TTL, Transport::Udp(payload))
    }

    pub fn wire_len(&self) -> usize {
        NET_HEADER_LEN
            + self.ah.map_or(0, |_| AH_LEN)
            + self.esp.as_ref().map_or(0, EspEnvelope::wire_len)
            + self.transport.as_ref().map_or(0, Transport::wire_len)
    }

    /// Sets `total_length` to the serialized size (saturating at the field width;
    /// `serialize` rejects oversize packets).
    pub fn refresh_length(&mut self) {
        self.header.total_length = u16::try_from(self.wire_len()).unwrap_or(u16::MAX);
    }

    /// Recomputes the protocol chain from the layers that are present.
    pub fn relink(&mut self) {
        let inner = match (&self.esp, &self.transport) {
            (Some(_), _) => Some(Protocol::Esp),
            (None, Some(t)) => Some(t.protocol()),
            (None, None) => None,
        };
        match (&mut self.ah, inner) {
            (Some(ah), Some(inner)) => {
                ah.next_protocol = inner;
                self.header.protocol = Protocol::Ah;
            }
            (None, Some(inner)) => self.header.protocol = inner,
            _ => {}
        }
        self.refresh_length();
    }

    /// The stream stamp, if the packet is a visible (unencrypted) stamped UDP datagram.
    pub fn stamp(&self) -> Option<StreamStamp> {
        match &self.transport {
            Some(Transport::Udp(u)) => u.stamp(),
            _ => None,
        }
    }

    fn check_chain(&self) -> Result<(), WireError> {
        let inner = match (&self.esp, &self.transport) {
            (Some(_), None) => Protocol::Esp,
            (None, Some(t)) => t.protocol(),
            (Some(_), Some(_)) => return Err(WireError::Inconsistent("ESP with cleartext transport")),
            (None, None) => return Err(WireError::Inconsistent("no payload layer")),
        };
        match self.ah {
            Some(ah) => {
                if self.header.protocol != Protocol::Ah {
                    return Err(WireError::Inconsistent("header does not point at AH"));
                }
                if ah.next_protocol != inner {
                    return Err(WireError::Inconsistent("AH next protocol mismatch"));
                }
            }
            None if self.header.protocol != inner => {
                return Err(WireError::Inconsistent("header protocol mismatch"));
            }
            None => {}
        }
        Ok(())
    }
}

fn need(bytes: &[u8], n: usize) -> Result<(), WireError> {
    if bytes.len() < n {
        Err(WireError::Truncated {
            needed: n,
            have: bytes.len(),
        })
    } else {
        Ok(())
    }
}

pub fn serialize(packet: &Packet) -> Result<Vec<u8>, WireError> {
    packet.check_chain()?;
    let len = packet.wire_len();
    if len > u16::MAX as usize {
        return Err(WireError::TooLarge(len));
    }
    if packet.header.total_length as usize != len {
        return Err(WireError::LengthMismatch {
            declared: packet.header.total_length as usize,
            actual: len,
        });
    }
    let mut out = Vec::with_capacity(len);
    let h = &packet.header;
    out.extend_from_slice(&[VERSION_IHL, 0]);
    out.extend_from_slice(&h.total_length.to_be_bytes());
    out.extend_from_slice(&[0, 0, 0, 0]);
    out.push(h.ttl);
    out.push(h.protocol.code());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&h.src.octets());
    out.extend_from_slice(&h.dst.octets());
    if let Some(ah) = &packet.ah {
        out.push(ah.next_protocol.code());
        out.push(AH_LEN_CODE);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&ah.spi.to_be_bytes());
        out.extend_from_slice(&ah.sequence.to_be_bytes());
        out.extend_from_slice(&ah.icv);
    }
    if let Some(esp) = &packet.esp {
        out.extend_from_slice(&esp.spi.to_be_bytes());
        out.extend_from_slice(&esp.sequence.to_be_bytes());
        out.extend_from_slice(&esp.data);
    }
    if let Some(t) = &packet.transport {
        t.encode(&mut out);
    }
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

pub fn deserialize(bytes: &[u8]) -> Result<Packet, WireError> {
    need(bytes, NET_HEADER_LEN)?;
    if bytes[0] != VERSION_IHL {
        return Err(WireError::BadHeader("version/IHL"));
    }
    let total_length = u16::from_be_bytes([bytes[2], bytes[3]]);
    need(bytes, total_length as usize)?;
    if total_length as usize != bytes.len() {
        return Err(WireError::LengthMismatch {
            declared: total_length as usize,
            actual: bytes.len(),
        });
    }
    if bytes[1] != 0 || bytes[4..8] != [0; 4] || bytes[10..12] != [0; 2] {
        return Err(WireError::BadHeader("reserved fields set"));
    }
    let header = NetHeader {
        src: Address(u32::from_be_bytes(bytes[12..16].try_into().unwrap())),
        dst: Address(u32::from_be_bytes(bytes[16..20].try_into().unwrap())),
        protocol: Protocol::from_code(bytes[9])?,
        ttl: bytes[TTL_OFFSET],
        total_length,
    };
    let mut rest = &bytes[NET_HEADER_LEN..];
    let mut next = header.protocol;
    let mut ah = None;
    if next == Protocol::Ah {
        need(rest, AH_LEN)?;
        if rest[1] != AH_LEN_CODE {
            return Err(WireError::BadHeader("AH length code"));
        }
        if rest[2..4] != [0, 0] {
            return Err(WireError::BadHeader("AH reserved"));
        }
        let next_protocol = Protocol::from_code(rest[0])?;
        if next_protocol == Protocol::Ah {
            return Err(WireError::Inconsistent("nested AH"));
        }
        let mut icv = [0u8; ICV_LEN];
        icv.copy_from_slice(&rest[AH_ICV_OFFSET..AH_LEN]);
        ah = Some(AhHeader {
            next_protocol,
            spi: u32::from_be_bytes(rest[4..8].try_into().unwrap()),
            sequence: u32::from_be_bytes(rest[8..12].try_into().unwrap()),
            icv,
        });
        rest = &rest[AH_LEN..];
        next = next_protocol;
    }
    let (esp, transport) = if next == Protocol::Esp {
        need(rest, ESP_HEADER_LEN)?;
        let esp = EspEnvelope {
            spi: u32::from_be_bytes(rest[0..4].try_into().unwrap()),
            sequence: u32::from_be_bytes(rest[4..8].try_into().unwrap()),
            data: rest[ESP_HEADER_LEN..].to_vec(),
        };
        (Some(esp), None)
    } else {
        (None, Some(Transport::decode(next, rest)?))
    };
    Ok(Packet {
        header,
        ah,
        esp,
        transport,
    })
}

/// Direction tag for hex-dump trace lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceDirection {
    Tx,
    Rx,
    Fwd,
}

impl TraceDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceDirection::Tx => "TX",
            TraceDirection::Rx => "RX",
            TraceDirection::Fwd => "FWD",
        }
    }
}

/// One line of the hex-dump trace: `<time_us> <node_id> <TX|RX|FWD> <hex bytes>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HexTraceLine {
    pub time_us: u64,
    pub node: u32,
    pub direction: TraceDirection,
    pub bytes: Vec<u8>,
}

impl fmt::Display for HexTraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.time_us,
            self.node,
            self.direction.as_str(),
            hex::encode(&self.bytes)
        )
    }
}

impl FromStr for HexTraceLine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        let mut field = |name: &str| it.next().ok_or_else(|| format!("missing {name}"));
        let time_us = field("time")?.parse().map_err(|e| format!("time: {e}"))?;
        let node = field("node")?.parse().map_err(|e| format!("node: {e}"))?;
        let direction = match field("direction")? {
            "TX" => TraceDirection::Tx,
            "RX" => TraceDirection::Rx,
            "FWD" => TraceDirection::Fwd,
            other => return Err(format!("bad direction '{other}'")),
        };
        let bytes = hex::decode(field("bytes")?).map_err(|e| format!("bytes: {e}"))?;
        Ok(HexTraceLine {
            time_us,
            node,
            direction,
            bytes,
        })
    }
}
