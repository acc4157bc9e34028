//! Irregular repetition slotted ALOHA (IRSA) over the noiseless binary adder
//! channel.
//!
//! The crate is organised around the life of a frame:
//!
//! * [`codebook`] builds the shared codebook (i.i.d. Bernoulli or BCH parity
//!   columns) and the replica-placement graph known to both ends.
//! * [`protocol`] activates users, assigns codewords and superimposes the
//!   replicas on the adder channel.
//! * [`decoders`] runs the receivers: singleton-only SIC, per-slot discarding
//!   with multi-packet reception (ED-MPR), full-graph erasure decoding (ED-FG),
//!   the BCH baseline and a brute-force oracle.
//! * [`analysis`] evaluates the closed-form resolution probabilities, density
//!   evolution thresholds and sum rates.
//! * [`montecarlo`] drives frame-level and slot-level simulations.
//!
//! Frames inside a Monte-Carlo point are independent, so the harness fans
//! them out over rayon when the `parallel` feature is on (the default). With
//! the feature off every [`Execution`] mode runs on the calling thread. Either
//! way the results are bit-identical because every frame draws from its own
//! counter-based stream (see [`rng`]).

pub mod analysis;
pub mod codebook;
pub mod decoders;
mod error;
mod exec;
pub mod montecarlo;
pub mod protocol;
pub mod rng;

pub use codebook::{Codebook, CodebookKind, FrameGraph};
pub use decoders::{DecodeOutcome, DecoderKind};
pub use error::{Error, Result};
pub use exec::Execution;
pub use protocol::{DegreeDistribution, ReceivedFrame, ScenarioConfig};
