//! Linear channel-output-feedback coding for hybrid-ARQ.
//!
//! The crate is organized bottom-up:
//!
//! - [`channel`]: Rayleigh block fading, forward/feedback noise, COI quantization.
//! - [`lfc`]: the linear feedback code `(g, F, q)`, its recursive encoder, the
//!   perfect and noisy combiners, post-processed SNR and power allocation.
//! - [`modem`]: square QAM with Gray labels and exact soft demapping.
//! - [`fec`]: rate-1/3 turbo code, CRC-16 and the incremental-redundancy puncturing table.
//! - [`multiantenna`]: beamforming codebooks, SVD + waterfilling and the outdated-CSI
//!   MIMO recursion.
//! - [`harq`]: the hybrid-ARQ session state machine and throughput accounting.
//! - [`curves`]: average post-processed SNR and uncoded MISO error-rate studies.
//! - [`sim`]: experiment specs, seeded Monte Carlo sweeps and result files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod curves;
pub mod error;
pub mod fec;
pub mod harq;
pub mod lfc;
pub mod linalg;
pub mod modem;
pub mod multiantenna;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
