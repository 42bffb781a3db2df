//! OLSR packet and message encoding.
//!
//! ```text
//! packet:  length:u16 | seq:u16 | message*
//! message: type:u8 | vtime:u8 | size:u16 | originator:u32 | ttl:u8 | hops:u8 | seq:u16 | body
//! HELLO:   reserved:u16 | htime:u8 | willingness:u8 | (link_code:u8 | reserved:u8 | size:u16 | addr:u32*)*
//! TC:      ansn:u16 | reserved:u16 | addr:u32*
//! ```

use thiserror::Error;

use crate::wire::Address;

pub const HELLO_TYPE: u8 = 1;
pub const TC_TYPE: u8 = 2;
const PACKET_HEADER_LEN: usize = 4;
const MESSAGE_HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("OLSR data truncated")]
    Truncated,
    #[error("OLSR length field mismatch")]
    Length,
    #[error("unknown OLSR message type {0}")]
    UnknownType(u8),
    #[error("bad link code {0:#x}")]
    LinkCode(u8),
}

/// Mantissa/exponent time encoding with a 1/16 s scaling constant:
/// `value = (1 + a/16) * 2^b / 16` seconds.
pub fn encode_vtime(micros: u64) -> u8 {
    let mut best = (u64::MAX, 0u8);
    for b in 0u8..16 {
        for a in 0u8..16 {
            let v = decode_vtime((a << 4) | b);
            let diff = v.abs_diff(micros);
            if diff < best.0 {
                best = (diff, (a << 4) | b);
            }
        }
    }
    best.1
}

pub fn decode_vtime(code: u8) -> u64 {
    let a = (code >> 4) as u64;
    let b = (code & 0x0f) as u32;
    // (16 + a) * 2^b / 256 seconds
    ((16 + a) << b) * 1_000_000 / 256
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkType {
    Unspec = 0,
    Asym = 1,
    Sym = 2,
    Lost = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeighborType {
    NotNeigh = 0,
    Sym = 1,
    Mpr = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkCode {
    pub neighbor: NeighborType,
    pub link: LinkType,
}

impl LinkCode {
    pub fn to_byte(self) -> u8 {
        ((self.neighbor as u8) << 2) | self.link as u8
    }

    pub fn from_byte(b: u8) -> Result<Self, MessageError> {
        let link = match b & 0b11 {
            0 => LinkType::Unspec,
            1 => LinkType::Asym,
            2 => LinkType::Sym,
            _ => LinkType::Lost,
        };
        let neighbor = match (b >> 2) & 0b11 {
            0 => NeighborType::NotNeigh,
            1 => NeighborType::Sym,
            2 => NeighborType::Mpr,
            _ => return Err(MessageError::LinkCode(b)),
        };
        if b >> 4 != 0 {
            return Err(MessageError::LinkCode(b));
        }
        Ok(LinkCode { neighbor, link })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub htime: u8,
    pub willingness: u8,
    pub links: Vec<(LinkCode, Vec<Address>)>,
}

impl Hello {
    /// Link code under which `addr` is listed, if any.
    pub fn code_for(&self, addr: Address) -> Option<LinkCode> {
        self.links
            .iter()
            .find(|(_, addrs)| addrs.contains(&addr))
            .map(|(code, _)| *code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tc {
    pub ansn: u16,
    pub advertised: Vec<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageBody {
    Hello(Hello),
    Tc(Tc),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub vtime: u8,
    pub originator: Address,
    pub ttl: u8,
    pub hop_count: u8,
    pub seq: u16,
    pub body: MessageBody,
}

impl Message {
    pub fn validity_us(&self) -> u64 {
        decode_vtime(self.vtime)
    }

    pub fn is_tc(&self) -> bool {
        matches!(self.body, MessageBody::Tc(_))
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let start = out.len();
        let kind = match self.body {
            MessageBody::Hello(_) => HELLO_TYPE,
            MessageBody::Tc(_) => TC_TYPE,
        };
        out.push(kind);
        out.push(self.vtime);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.originator.octets());
        out.push(self.ttl);
        out.push(self.hop_count);
        out.extend_from_slice(&self.seq.to_be_bytes());
        match &self.body {
            MessageBody::Hello(h) => {
                out.extend_from_slice(&[0, 0, h.htime, h.willingness]);
                for (code, addrs) in &h.links {
                    out.push(code.to_byte());
                    out.push(0);
                    out.extend_from_slice(&((4 + 4 * addrs.len()) as u16).to_be_bytes());
                    for a in addrs {
                        out.extend_from_slice(&a.octets());
                    }
                }
            }
            MessageBody::Tc(tc) => {
                out.extend_from_slice(&tc.ansn.to_be_bytes());
                out.extend_from_slice(&[0, 0]);
                for a in &tc.advertised {
                    out.extend_from_slice(&a.octets());
                }
            }
        }
        let size = (out.len() - start) as u16;
        out[start + 2..start + 4].copy_from_slice(&size.to_be_bytes());
    }

    fn decode(b: &[u8]) -> Result<Self, MessageError> {
        if b.len() < MESSAGE_HEADER_LEN {
            return Err(MessageError::Truncated);
        }
        let originator = read_addr(&b[4..8]);
        let body_bytes = &b[MESSAGE_HEADER_LEN..];
        let body = match b[0] {
            HELLO_TYPE => {
                if body_bytes.len() < 4 {
                    return Err(MessageError::Truncated);
                }
                let mut links = Vec::new();
                let mut rest = &body_bytes[4..];
                while !rest.is_empty() {
                    if rest.len() < 4 {
                        return Err(MessageError::Truncated);
                    }
                    let code = LinkCode::from_byte(rest[0])?;
                    let size = u16::from_be_bytes([rest[2], rest[3]]) as usize;
                    if size < 4 || (size - 4) % 4 != 0 || size > rest.len() {
                        return Err(MessageError::Length);
                    }
                    links.push((code, rest[4..size].chunks(4).map(read_addr).collect()));
                    rest = &rest[size..];
                }
                MessageBody::Hello(Hello {
                    htime: body_bytes[2],
                    willingness: body_bytes[3],
                    links,
                })
            }
            TC_TYPE => {
                if body_bytes.len() < 4 || (body_bytes.len() - 4) % 4 != 0 {
                    return Err(MessageError::Length);
                }
                MessageBody::Tc(Tc {
                    ansn: u16::from_be_bytes([body_bytes[0], body_bytes[1]]),
                    advertised: body_bytes[4..].chunks(4).map(read_addr).collect(),
                })
            }
            other => return Err(MessageError::UnknownType(other)),
        };
        Ok(Message {
            vtime: b[1],
            originator,
            ttl: b[8],
            hop_count: b[9],
            seq: u16::from_be_bytes([b[10], b[11]]),
            body,
        })
    }
}

fn read_addr(b: &[u8]) -> Address {
    Address(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OlsrPacket {
    pub seq: u16,
    pub messages: Vec<Message>,
}

impl OlsrPacket {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![0, 0];
        out.extend_from_slice(&self.seq.to_be_bytes());
        for m in &self.messages {
            m.encode(&mut out);
        }
        let len = out.len() as u16;
        out[0..2].copy_from_slice(&len.to_be_bytes());
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self, MessageError> {
        if b.len() < PACKET_HEADER_LEN {
            return Err(MessageError::Truncated);
        }
        if u16::from_be_bytes([b[0], b[1]]) as usize != b.len() {
            return Err(MessageError::Length);
        }
        let mut messages = Vec::new();
        let mut rest = &b[PACKET_HEADER_LEN..];
        while !rest.is_empty() {
            if rest.len() < MESSAGE_HEADER_LEN {
                return Err(MessageError::Truncated);
            }
            let size = u16::from_be_bytes([rest[2], rest[3]]) as usize;
            if size < MESSAGE_HEADER_LEN || size > rest.len() {
                return Err(MessageError::Length);
            }
            messages.push(Message::decode(&rest[..size])?);
            rest = &rest[size..];
        }
        Ok(OlsrPacket {
            seq: u16::from_be_bytes([b[2], b[3]]),
            messages,
        })
    }
}
