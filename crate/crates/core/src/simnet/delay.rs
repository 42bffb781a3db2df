use crate::crypto::{Algorithm, AuthAlgorithm, CipherAlgorithm, CryptoCostSample};

pub const DEFAULT_FORWARD_US: u64 = 200;

/// Fixed cost plus a per-byte slope, in nanoseconds and picoseconds so the
/// arithmetic stays integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimitiveCost {
    pub setup_ns: u64,
    pub per_byte_ps: u64,
}

impl PrimitiveCost {
    pub fn ns(&self, bytes: usize) -> u64 {
        self.setup_ns + (self.per_byte_ps * bytes as u64).div_ceil(1000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParametricCosts {
    pub hmac_md5: PrimitiveCost,
    pub hmac_sha1: PrimitiveCost,
    pub aes_cbc: PrimitiveCost,
    pub tdes_cbc: PrimitiveCost,
}

impl Default for ParametricCosts {
    /// Software throughputs of a mid-2010s laptop core: AES ~125 MB/s,
    /// 3DES ~25 MB/s, MD5 ~330 MB/s, SHA-1 ~250 MB/s.
    fn default() -> Self {
        ParametricCosts {
            hmac_md5: PrimitiveCost {
                setup_ns: 800,
                per_byte_ps: 3_000,
            },
            hmac_sha1: PrimitiveCost {
                setup_ns: 1_000,
                per_byte_ps: 4_000,
            },
            aes_cbc: PrimitiveCost {
                setup_ns: 1_000,
                per_byte_ps: 8_000,
            },
            tdes_cbc: PrimitiveCost {
                setup_ns: 1_500,
                per_byte_ps: 40_000,
            },
        }
    }
}

impl ParametricCosts {
    pub fn cost(&self, alg: Algorithm) -> PrimitiveCost {
        match alg {
            Algorithm::Auth(AuthAlgorithm::HmacMd5) => self.hmac_md5,
            Algorithm::Auth(AuthAlgorithm::HmacSha1) => self.hmac_sha1,
            Algorithm::Cipher(CipherAlgorithm::AesCbc) => self.aes_cbc,
            Algorithm::Cipher(CipherAlgorithm::TdesCbc) => self.tdes_cbc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMode {
    /// Cost table lookup; fully reproducible.
    Parametric(ParametricCosts),
    /// Wall-clock time of the primitive, charged 1:1 as simulated time.
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayModel {
    pub mode: DelayMode,
    /// Per-packet processing at intermediate nodes.
    pub forward_us: u64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            mode: DelayMode::Parametric(ParametricCosts::default()),
            forward_us: DEFAULT_FORWARD_US,
        }
    }
}

impl DelayModel {
    pub fn measured() -> Self {
        DelayModel {
            mode: DelayMode::Measured,
            ..Self::default()
        }
    }

    pub fn is_measured(&self) -> bool {
        matches!(self.mode, DelayMode::Measured)
    }

    /// Processing time for a batch of primitive invocations, rounded up to
    /// whole microseconds. Empty batches cost nothing.
    pub fn charge(&self, samples: &[CryptoCostSample]) -> u64 {
        let ns: u64 = match &self.mode {
            DelayMode::Parametric(c) => samples.iter().map(|s| c.cost(s.algorithm).ns(s.payload_bytes)).sum(),
            DelayMode::Measured => samples
                .iter()
                .map(|s| u64::try_from(s.elapsed.as_nanos()).unwrap_or(u64::MAX))
                .sum(),
        };
        ns.div_ceil(1000)
    }
}
