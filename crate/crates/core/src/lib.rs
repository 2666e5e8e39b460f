//! Read-channel simulation around a noise-predictive List-Viterbi detector.
//!
//! The write path is Reed-Solomon coding, byte interleaving, per-window
//! error-detection parity, 1/(1 + D^2) precoding and a Lorentzian recording
//! channel with jitter and electronics noise. The read path is a Butterworth
//! front end, an MMSE PR4 equalizer, a noise-predictive List-Viterbi detector
//! with periodic EDC-gated decisions, and the block-multinomial model for
//! post-ECC codeword failure rates.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detector;
pub mod equalizer;
pub mod error;
pub mod framing;
pub mod gf_rs;
pub mod harness;
pub mod postecc;
pub mod rng;

pub use channel::{ChannelConfig, ReadChannel, Sampled, Waveform};
pub use detector::{
    branch_cost, DetectorConfig, DetectorOutput, EdcGate, ListState, ListViterbi, NpmlViterbi,
    PathEntry, Trellis, WindowCandidate,
};
pub use equalizer::{EqualizerTaps, WhitenerCoeffs};
pub use error::{Error, Result};
pub use framing::{Crc, EdcScheme, PrecoderSpec, WindowFormat};
pub use gf_rs::{GfElement, Interleaver, RsCode};
pub use postecc::{BmmParams, CfrEstimate, WeightDistribution};
