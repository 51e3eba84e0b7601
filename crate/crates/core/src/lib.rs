//! Blind recovery of the interleaver of a rate-1/3 parallel turbo code.
//!
//! The crate is organised bottom-up:
//!
//! - [`trellis`], [`interleaver`] and [`channel`] model the transmitter: RSC trellis,
//!   turbo encoding, BPSK over AWGN and the per-sample bit likelihoods.
//! - [`forward`] keeps the log-domain forward state belief of the second constituent
//!   encoder for one received block.
//! - [`recovery`] is the incremental maximum-posterior recovery engine: at every
//!   iteration it scores each candidate position, commits the best one and advances
//!   all block beliefs by one trellis step.
//! - [`early_stop`] watches the per-iteration score vectors and signals when the
//!   recovery has most likely lost track.
//! - [`calibration`] derives the early-stopping thresholds from the closed-form
//!   stop-time and loss models.
//!
//! Positions and interleaver entries are 0-based throughout the API.

pub mod calibration;
pub mod channel;
pub mod early_stop;
mod error;
pub mod forward;
pub mod interleaver;
pub mod logmath;
pub mod recovery;
pub mod trellis;

pub use channel::{ChannelModel, ReceivedBlock};
pub use early_stop::{epsilon_statistic, Monitor, ThresholdPair};
pub use error::Error;
pub use forward::StateBelief;
pub use interleaver::Interleaver;
pub use recovery::{run_recovery, CandidatePolicy, RecoveryOutcome, RecoverySession, ScoreVector};
pub use trellis::{GeneratorSpec, Trellis};

/// A single binary digit, always 0 or 1.
pub type Bit = u8;

pub type Result<T> = std::result::Result<T, Error>;
