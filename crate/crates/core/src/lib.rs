//! Finite-blocklength analysis of a two-user uplink under orthogonal (OMA)
//! and non-orthogonal (NOMA) multiple access: normal-approximation rates
//! and error probabilities over AWGN, linearized and exact outage over
//! quasi-static Rayleigh fading, type-I ARQ, Monte Carlo validation, and
//! figure sweeps.

pub mod arq;
pub mod awgn;
pub mod error;
pub mod fading;
pub mod figures;
pub mod flags;
pub mod montecarlo;
pub mod numerics;
pub mod quadrature;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
pub use flags::{Flagged, Flags};
