//! Real-domain Schnorr-Euchner K-best detection for high-order M-QAM MIMO.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense matrices, complex to real system decomposition and
//!   QR factorization by Givens rotations.
//! * [`modem`]: square Gray-mapped M-QAM constellations, hard demapping and
//!   max-log LLRs.
//! * [`detector`]: Schnorr-Euchner K-best with distributed sorting,
//!   conventional K-best and exhaustive ML, all instrumented with node
//!   counters, plus the closed-form complexity expressions.
//! * [`channel`]: seeded Rayleigh channel and AWGN generation.
//! * [`harness`]: Monte-Carlo BER experiments, presets and result files.

pub mod channel;
pub mod detector;
pub mod error;
pub mod harness;
pub mod modem;
pub mod numerics;

pub use error::{Error, Result};
