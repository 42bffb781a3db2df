//! Deterministic MANET security laboratory: OLSR routing, transport-mode
//! AH/ESP, a discrete-event network simulator and the measurement pipeline
//! that compares MD5/SHA-1 × AES/3DES overheads on UDP video streams.

pub mod cli;
pub mod crypto;
pub mod ipsec;
pub mod metrics;
pub mod olsr;
pub mod simnet;
pub mod traffic;
pub mod wire;
