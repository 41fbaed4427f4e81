//! Coherent optical transmission simulation and adaptive turbo equalization.
//!
//! The crate covers the full desk-scale link: probabilistically shaped QAM
//! generation (Maxwell-Boltzmann priors + constant-composition distribution
//! matching), protograph LDPC coding with puncturing, pulse shaping and WDM
//! multiplexing, split-step Manakov fiber propagation with EDFA noise,
//! EDC/DBP receiver front-ends, and an iterative LMMSE/RLS turbo equalizer
//! that exchanges soft information with the LDPC decoder.
//!
//! The `harness` module orchestrates Monte Carlo sweeps over launch power and
//! span count and writes per-iteration BER / SNR records as CSV; the
//! `fiberteq` binary exposes it on the command line.

pub mod ccdm;
pub mod constellation;
pub mod fec;
pub mod fiber;
pub mod framing;
pub mod harness;
pub mod metrics;
pub mod rxdsp;
pub mod turbo;
pub mod txwave;
pub mod util;
pub mod waveform;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation order {0}: expected one of 4, 16, 64, 256, 1024")]
    UnsupportedOrder(usize),
    #[error("infeasible shaping target: {0}")]
    InfeasibleEntropy(String),
    #[error("ccdm: {0}")]
    Ccdm(String),
    #[error("ldpc: {0}")]
    Ldpc(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("waveform: {0}")]
    Waveform(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
