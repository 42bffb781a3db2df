//! Constant-bit-rate UDP stream source and sink.

use std::collections::HashSet;

use rand::RngCore;
use thiserror::Error;

use crate::wire::{Address, StreamStamp, UdpPayload, STAMP_LEN};

pub const DEFAULT_PAYLOAD_BYTES: usize = 1316;
pub const DEFAULT_RATE_PPS: u32 = 25;
pub const DEFAULT_DURATION_US: u64 = 300 * 1_000_000;
pub const VIDEO_PORT: u16 = 5004;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("payload of {0} bytes cannot hold the {STAMP_LEN}-byte stream stamp")]
    PayloadTooSmall(usize),
    #[error("rate must be positive")]
    ZeroRate,
    #[error("rate above 1e6 packets/s cannot be spaced on a microsecond clock")]
    RateTooHigh,
    #[error("duration must be positive")]
    ZeroDuration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamConfig {
    pub stream_id: u32,
    pub src: Address,
    pub dst: Address,
    pub src_port: u16,
    pub dst_port: u16,
    /// UDP data length, stamp included.
    pub payload_bytes: usize,
    pub rate_pps: u32,
    pub duration_us: u64,
    /// Simulated time of the first emission.
    pub start_us: u64,
}

impl StreamConfig {
    pub fn new(src: Address, dst: Address) -> Self {
        StreamConfig {
            stream_id: 0,
            src,
            dst,
            src_port: VIDEO_PORT,
            dst_port: VIDEO_PORT,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            rate_pps: DEFAULT_RATE_PPS,
            duration_us: DEFAULT_DURATION_US,
            start_us: 0,
        }
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        if self.payload_bytes < STAMP_LEN {
            return Err(StreamError::PayloadTooSmall(self.payload_bytes));
        }
        if self.rate_pps == 0 {
            return Err(StreamError::ZeroRate);
        }
        if self.rate_pps > 1_000_000 {
            return Err(StreamError::RateTooHigh);
        }
        if self.duration_us == 0 {
            return Err(StreamError::ZeroDuration);
        }
        Ok(())
    }

    /// floor(rate × duration).
    pub fn packet_count(&self) -> u64 {
        (self.rate_pps as u128 * self.duration_us as u128 / 1_000_000) as u64
    }

    pub fn emission_time(&self, index: u64) -> u64 {
        self.start_us + (index as u128 * 1_000_000 / self.rate_pps as u128) as u64
    }

    /// Stamped datagram for `packet_id` with pseudorandom filler.
    pub fn payload(&self, packet_id: u64, rng: &mut dyn RngCore) -> UdpPayload {
        let mut filler = vec![0u8; self.payload_bytes - STAMP_LEN];
        rng.fill_bytes(&mut filler);
        UdpPayload::stamped(
            self.src_port,
            self.dst_port,
            StreamStamp {
                stream_id: self.stream_id,
                packet_id,
            },
            filler,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub packet_id: u64,
    pub time_us: u64,
}

/// Full emission schedule: ids 0, 1, 2, … at uniform spacing.
pub fn generate(config: &StreamConfig) -> Result<Vec<Emission>, StreamError> {
    config.validate()?;
    Ok((0..config.packet_count())
        .map(|i| Emission {
            packet_id: i,
            time_us: config.emission_time(i),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub node: u32,
    pub stream_id: u32,
    pub packet_id: u64,
    pub rx_time_us: u64,
    pub duplicate: bool,
}

/// Application-level receiver. Records every stamped delivery in arrival order.
#[derive(Debug, Clone, Default)]
pub struct Sink {
    pub receipts: Vec<Receipt>,
    seen: HashSet<(u32, u64)>,
}

impl Sink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, node: u32, stamp: StreamStamp, now: u64) -> Receipt {
        let duplicate = !self.seen.insert((stamp.stream_id, stamp.packet_id));
        let r = Receipt {
            node,
            stream_id: stamp.stream_id,
            packet_id: stamp.packet_id,
            rx_time_us: now,
            duplicate,
        };
        self.receipts.push(r);
        r
    }

    /// First-time receipts for one stream.
    pub fn unique(&self, stream_id: u32) -> impl Iterator<Item = &Receipt> {
        self.receipts
            .iter()
            .filter(move |r| r.stream_id == stream_id && !r.duplicate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> StreamConfig {
        StreamConfig::new(Address::new(10, 0, 0, 1), Address::new(10, 0, 0, 2))
    }

    #[test]
    fn five_minutes_at_25pps() {
        let e = generate(&cfg()).unwrap();
        assert_eq!(e.len(), 7500);
        assert_eq!(e[0], Emission { packet_id: 0, time_us: 0 });
        assert!(e.windows(2).all(|w| w[1].time_us - w[0].time_us == 40_000));
        assert!(e.iter().enumerate().all(|(i, x)| x.packet_id == i as u64));
    }

    #[test]
    fn short_duration() {
        let mut c = cfg();
        c.duration_us = 40_000;
        assert_eq!(generate(&c).unwrap().len(), 1);
        c.duration_us = 39_999;
        assert_eq!(generate(&c).unwrap().len(), 0);
    }

    #[test]
    fn uneven_rate_is_strictly_increasing() {
        let mut c = cfg();
        c.rate_pps = 7;
        c.duration_us = 10_000_000;
        let e = generate(&c).unwrap();
        assert_eq!(e.len(), 70);
        assert!(e.windows(2).all(|w| w[1].time_us > w[0].time_us));
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg();
        c.rate_pps = 0;
        assert_eq!(generate(&c), Err(StreamError::ZeroRate));
        let mut c = cfg();
        c.duration_us = 0;
        assert_eq!(generate(&c), Err(StreamError::ZeroDuration));
        let mut c = cfg();
        c.payload_bytes = 11;
        assert_eq!(generate(&c), Err(StreamError::PayloadTooSmall(11)));
    }

    #[test]
    fn payload_is_stamped_and_sized() {
        let p = cfg().payload(42, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(p.body.len(), DEFAULT_PAYLOAD_BYTES);
        assert_eq!(p.stamp().unwrap().packet_id, 42);
    }

    #[test]
    fn sink_flags_duplicates_and_keeps_order() {
        let mut s = Sink::new();
        let st = |id| StreamStamp { stream_id: 0, packet_id: id };
        assert!(!s.record(2, st(5), 10).duplicate);
        assert!(!s.record(2, st(3), 11).duplicate);
        assert!(s.record(2, st(5), 12).duplicate);
        let ids: Vec<_> = s.unique(0).map(|r| r.packet_id).collect();
        assert_eq!(ids, vec![5, 3]);
    }
}
