//! Forward error correction: convolutional encoding, puncturing, random bit
//! interleaving and soft-input Viterbi decoding.
//!
//! Soft values follow the LLR convention used across the crate: a positive
//! value means bit 0 is more likely, and 0 is an erasure.

mod conv;
mod interleave;
mod puncture;
mod viterbi;

pub use conv::{conv_encode, ConvCode};
pub use interleave::Interleaver;
pub use puncture::{depuncture, puncture, PuncturePattern};
pub use viterbi::viterbi_decode;
