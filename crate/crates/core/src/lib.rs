//! Link-level simulation of interference alignment with limited feedback.
//!
//! `M` single-antenna source-destination pairs share a band over
//! frequency-selective channels with `L` taps each. A cyclic (OFDM-style)
//! signal model turns each link into `N` parallel tones. Destinations
//! quantize their normalized channel vectors against a shared Grassmannian
//! line-packing codebook and broadcast the codeword indices over error-free
//! feedback links; every node then runs the interference-alignment precoder
//! construction *naively* on the reconstructed, quantized channel knowledge.
//!
//! The library provides the pieces of that experiment and the measurements
//! around it:
//!
//! - [`network`]: random `L`-tap interference networks and tap/tone
//!   conversion under a unitary DFT.
//! - [`codebook`]: greedy maximal line packings on the unit sphere of
//!   `C^L` and the induced quantizer.
//! - [`feedback`]: the feedback phase — quantize, broadcast indices,
//!   reconstruct DFT-domain quantized CSI from the indices alone.
//! - [`alignment`]: IA dimension bookkeeping for general `M` and the
//!   explicit 3-pair direction construction, usable with exact or
//!   quantized CSI.
//! - [`evaluation`]: per-stream gains and interference against the true
//!   channels, rate lower bounds, the constant interference bound, and
//!   sum-rate-slope sweeps over transmit power.
//! - [`validation`]: a self-check suite wiring the above together.
//!
//! Entry points for a whole experiment are
//! [`evaluation::run_trial`] and [`evaluation::dof_sweep`].

pub mod alignment;
mod bloch;
pub mod codebook;
pub mod evaluation;
pub mod feedback;
pub mod math;
pub mod network;
pub mod validation;

/// M-by-M grid of per-link values, indexed `[destination][source]`.
pub type Grid<T> = Vec<Vec<T>>;

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("degenerate CSI: {0}")]
    DegenerateCsi(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("corrupt feedback: {0}")]
    CorruptFeedback(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
