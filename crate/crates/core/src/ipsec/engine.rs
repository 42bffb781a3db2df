use std::fmt;

use rand::RngCore;

use super::{IpsecError, IpsecProtocol, PolicyDirection, SecurityAssociation, SecurityDatabases};
use crate::crypto::{self, Algorithm, CryptoCostSample, CryptoOp};
use crate::wire::{
    self, AhHeader, EspEnvelope, Packet, Protocol, Transport, AH_ICV_OFFSET, AH_LEN, NET_HEADER_LEN, TTL_OFFSET,
};

/// Receives one sample per primitive invocation made by the engine.
pub trait CostMeter {
    fn record(&mut self, sample: CryptoCostSample);
}

impl CostMeter for () {
    fn record(&mut self, _: CryptoCostSample) {}
}

impl CostMeter for Vec<CryptoCostSample> {
    fn record(&mut self, sample: CryptoCostSample) {
        self.push(sample);
    }
}

/// Why an inbound packet was dropped by the security layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reject {
    NoSa,
    Integrity,
    Replay,
    Padding,
    Policy,
    Malformed,
}

impl Reject {
    pub fn name(self) -> &'static str {
        match self {
            Reject::NoSa => "no_sa",
            Reject::Integrity => "integrity",
            Reject::Replay => "replay",
            Reject::Padding => "padding",
            Reject::Policy => "policy",
            Reject::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Bytes covered by the AH ICV: the serialized packet with TTL and the ICV
/// field zeroed.
pub fn ah_icv_input(packet: &Packet) -> Result<Vec<u8>, wire::WireError> {
    let mut bytes = wire::serialize(packet)?;
    bytes[TTL_OFFSET] = 0;
    if packet.ah.is_some() {
        let icv = NET_HEADER_LEN + AH_ICV_OFFSET;
        bytes[icv..NET_HEADER_LEN + AH_LEN].fill(0);
    }
    Ok(bytes)
}

fn compute_icv(sa: &SecurityAssociation, packet: &Packet, meter: &mut dyn CostMeter) -> Result<crypto::Icv, IpsecError> {
    let alg = sa.auth_algorithm().ok_or(IpsecError::WrongSaProtocol {
        expected: IpsecProtocol::Ah,
        actual: sa.protocol,
    })?;
    let input = ah_icv_input(packet)?;
    let (icv, sample) = crypto::timed(CryptoOp::Mac, Algorithm::Auth(alg), input.len(), || {
        crypto::mac(alg, &sa.key, &input)
    });
    meter.record(sample);
    Ok(icv?)
}

/// Inserts an AH header after the network header and fills in the ICV.
pub fn ah_seal(mut packet: Packet, sa: &mut SecurityAssociation, meter: &mut dyn CostMeter) -> Result<Packet, IpsecError> {
    if sa.protocol != IpsecProtocol::Ah {
        return Err(IpsecError::WrongSaProtocol {
            expected: IpsecProtocol::Ah,
            actual: sa.protocol,
        });
    }
    if packet.ah.is_some() {
        return Err(IpsecError::Layout("packet already carries AH"));
    }
    let sequence = sa.next_tx_sequence()?;
    packet.ah = Some(AhHeader {
        next_protocol: Protocol::Udp,
        spi: sa.spi,
        sequence,
        icv: [0; crypto::ICV_LEN],
    });
    packet.relink();
    let icv = compute_icv(sa, &packet, meter)?;
    if let Some(ah) = packet.ah.as_mut() {
        ah.icv = icv;
    }
    Ok(packet)
}

/// Verifies and strips the AH header. Accepts only sequences above the
/// highest already accepted on the SA.
pub fn ah_verify(mut packet: Packet, dbs: &mut SecurityDatabases, meter: &mut dyn CostMeter) -> Result<Packet, Reject> {
    let ah = packet.ah.ok_or(Reject::Malformed)?;
    let sa = dbs
        .find_sa_mut(packet.header.dst, ah.spi, IpsecProtocol::Ah)
        .ok_or(Reject::NoSa)?;
    let expected = compute_icv(sa, &packet, meter).map_err(|_| Reject::Malformed)?;
    if expected != ah.icv {
        return Err(Reject::Integrity);
    }
    if ah.sequence <= sa.rx_highest_seen {
        return Err(Reject::Replay);
    }
    sa.rx_highest_seen = ah.sequence;
    packet.ah = None;
    packet.relink();
    Ok(packet)
}

/// Minimal ESP padding so that `payload_len + pad + 2` fills whole blocks.
pub fn esp_pad_len(payload_len: usize, block: usize) -> usize {
    (block - (payload_len + 2) % block) % block
}

/// Encrypts the transport payload into an ESP envelope.
pub fn esp_seal(
    mut packet: Packet,
    sa: &mut SecurityAssociation,
    iv_source: &mut dyn RngCore,
    meter: &mut dyn CostMeter,
) -> Result<Packet, IpsecError> {
    let cipher = sa.cipher_algorithm().ok_or(IpsecError::WrongSaProtocol {
        expected: IpsecProtocol::Esp,
        actual: sa.protocol,
    })?;
    if packet.ah.is_some() {
        return Err(IpsecError::Layout("ESP must be applied before AH"));
    }
    let transport = packet
        .transport
        .take()
        .ok_or(IpsecError::Layout("no cleartext transport to encrypt"))?;
    let block = cipher.block_len();
    let mut plaintext = transport.to_bytes();
    let pad = esp_pad_len(plaintext.len(), block);
    plaintext.extend((1..=pad).map(|i| i as u8));
    plaintext.push(pad as u8);
    plaintext.push(transport.protocol().code());
    let mut iv = vec![0u8; cipher.iv_len()];
    iv_source.fill_bytes(&mut iv);
    let (ciphertext, sample) = crypto::timed(CryptoOp::Encrypt, Algorithm::Cipher(cipher), plaintext.len(), || {
        crypto::encrypt_cbc(cipher, &sa.key, &iv, &plaintext)
    });
    meter.record(sample);
    let ciphertext = ciphertext?;
    let sequence = sa.next_tx_sequence()?;
    packet.esp = Some(EspEnvelope::new(sa.spi, sequence, &iv, &ciphertext));
    packet.relink();
    Ok(packet)
}

/// Decrypts an ESP envelope and restores the transport payload.
pub fn esp_open(mut packet: Packet, dbs: &mut SecurityDatabases, meter: &mut dyn CostMeter) -> Result<Packet, Reject> {
    if packet.ah.is_some() {
        return Err(Reject::Malformed);
    }
    let esp = packet.esp.take().ok_or(Reject::Malformed)?;
    let sa = dbs
        .find_sa_mut(packet.header.dst, esp.spi, IpsecProtocol::Esp)
        .ok_or(Reject::NoSa)?;
    let cipher = sa.cipher_algorithm().ok_or(Reject::NoSa)?;
    let block = cipher.block_len();
    let (iv, ciphertext) = esp.split(cipher.iv_len()).ok_or(Reject::Malformed)?;
    if ciphertext.is_empty() || ciphertext.len() % block != 0 {
        return Err(Reject::Malformed);
    }
    let (plaintext, sample) = crypto::timed(CryptoOp::Decrypt, Algorithm::Cipher(cipher), ciphertext.len(), || {
        crypto::decrypt_cbc(cipher, &sa.key, iv, ciphertext)
    });
    meter.record(sample);
    let plaintext = plaintext.map_err(|_| Reject::Malformed)?;
    let n = plaintext.len();
    let (next, pad_len) = (plaintext[n - 1], plaintext[n - 2] as usize);
    if pad_len >= block || pad_len + 2 > n {
        return Err(Reject::Padding);
    }
    let body_end = n - 2 - pad_len;
    if !plaintext[body_end..n - 2]
        .iter()
        .enumerate()
        .all(|(i, &b)| b as usize == i + 1)
    {
        return Err(Reject::Padding);
    }
    let protocol = match Protocol::from_code(next) {
        Ok(p @ (Protocol::Udp | Protocol::Olsr)) => p,
        _ => return Err(Reject::Padding),
    };
    let transport = Transport::decode(protocol, &plaintext[..body_end]).map_err(|_| Reject::Malformed)?;
    if esp.sequence <= sa.rx_highest_seen {
        return Err(Reject::Replay);
    }
    sa.rx_highest_seen = esp.sequence;
    packet.transport = Some(transport);
    packet.relink();
    Ok(packet)
}

/// Applies the first matching out-policy: ESP on the payload, then AH over
/// the result. Packets without a matching policy pass unchanged.
pub fn outbound(
    packet: Packet,
    dbs: &mut SecurityDatabases,
    iv_source: &mut dyn RngCore,
    meter: &mut dyn CostMeter,
) -> Result<Packet, IpsecError> {
    let (src, dst) = (packet.header.src, packet.header.dst);
    let Some(policy) = dbs.policy(PolicyDirection::Out, src, dst) else {
        return Ok(packet);
    };
    let (need_esp, need_ah) = (policy.requires(IpsecProtocol::Esp), policy.requires(IpsecProtocol::Ah));
    let missing = |protocol| IpsecError::NoSaForPolicy { src, dst, protocol };
    let mut packet = packet;
    if need_esp {
        let sa = dbs
            .outbound_sa_mut(src, dst, IpsecProtocol::Esp)
            .ok_or_else(|| missing(IpsecProtocol::Esp))?;
        packet = esp_seal(packet, sa, iv_source, meter)?;
    }
    if need_ah {
        let sa = dbs
            .outbound_sa_mut(src, dst, IpsecProtocol::Ah)
            .ok_or_else(|| missing(IpsecProtocol::Ah))?;
        packet = ah_seal(packet, sa, meter)?;
    }
    Ok(packet)
}

/// Strips AH then ESP and checks that every transform the in-policy
/// requires was actually present.
pub fn inbound(packet: Packet, dbs: &mut SecurityDatabases, meter: &mut dyn CostMeter) -> Result<Packet, Reject> {
    let (src, dst) = (packet.header.src, packet.header.dst);
    let mut applied = Vec::with_capacity(2);
    let mut packet = packet;
    if packet.ah.is_some() {
        packet = ah_verify(packet, dbs, meter)?;
        applied.push(IpsecProtocol::Ah);
    }
    if packet.esp.is_some() {
        packet = esp_open(packet, dbs, meter)?;
        applied.push(IpsecProtocol::Esp);
    }
    if let Some(policy) = dbs.policy(PolicyDirection::In, src, dst) {
        if !policy.transforms.iter().all(|t| applied.contains(t)) {
            return Err(Reject::Policy);
        }
    }
    Ok(packet)
}
