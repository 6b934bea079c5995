//! Link-level Monte-Carlo simulator for the downlink of a multi-carrier CDMA
//! (MC-CDMA) system.
//!
//! The transmit chain is convolutional coding, puncturing, bit interleaving,
//! QPSK/16-QAM mapping, Walsh-Hadamard spreading, regular frequency
//! interleaving and OFDM with a cyclic prefix. The channel is a tapped delay
//! line with Rayleigh fading. The receiver hands the per-carrier signal and
//! the exact channel response to one of the detectors in [`detectors`]
//! (EGC, MMSEC, GMMSE, polynomial GMMSE, PIC, SIC) and then soft-demaps,
//! deinterleaves, depunctures and Viterbi-decodes.
//!
//! [`simkit`] runs the Monte-Carlo engine, Eb/N0 x load sweeps and the
//! extraction of the Eb/N0 required to reach a target BER or FER.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detectors;
mod error;
pub mod fec;
pub mod mapping;
pub mod ofdm;
pub mod simkit;
pub mod spreading;
pub mod sysmodel;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
