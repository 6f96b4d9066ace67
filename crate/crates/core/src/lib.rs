//! Capacity regions of finite-state Markov multiple-access channels with
//! conferencing encoders and delayed transmitter CSI.
//!
//! The crate is `no_std` (it needs `alloc`). Enable `std` for the
//! `std::error::Error` glue and `parallel` to spread search restarts,
//! solver multistarts and Monte Carlo trials over a rayon pool. Results are
//! identical with and without `parallel`: every restart and trial draws from
//! its own stream derived from `(seed, index)`.
//!
//! Modules:
//! - [`markov`]: the state process, d-step matrices and the joint law of the
//!   true and delayed states.
//! - [`info`]: dense joint PMFs, input policies, DMCs and conditional mutual
//!   information.
//! - [`discrete`]: rate bounds for a given policy, polytope geometry and the
//!   quantized policy search.
//! - [`gaussian`]: the diagonal-vector Gaussian region as a concave program.
//! - [`asymptotics`]: closed forms for the scalar single-state channel.
//! - [`coding`]: Monte Carlo of the strategy-letter random coding scheme.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod coding;
pub mod discrete;
mod error;
pub mod gaussian;
pub mod info;
pub mod linalg;
pub mod markov;
mod par;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use markov::{DelayedStateJoint, MarkovChain};
