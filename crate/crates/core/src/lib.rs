//! Mean-field fairness model of a chain of IEEE 802.11 sender/receiver pairs.
//!
//! Each pair `i` of a chain of `n` pairs emits with stationary probability
//! `x_i`, and the probabilities satisfy the nonlinear system
//!
//! ```text
//! x_i = α (1 - x_{i-1}) (1 - x_{i+1}),   i = 1..n,   x_0 = x_{n+1} = 0
//! ```
//!
//! where `α` is the probability that a pair emits when both neighbours are
//! idle. This crate solves that system, maximizes the entropy fairness of
//! the solution over `α`, maps 802.11b frame timing onto `α`, fits `α` to
//! measured throughputs and checks the mean-field approximation against a
//! stochastic slot process with an exact small-chain oracle.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, plotting and
//! the command line live in the `chainfair` crate.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod error;
pub mod fairness;
pub mod fit;
pub mod model;
mod scalar;
pub mod sim;
pub mod solver;
pub mod timing;
mod tridiag;

pub use error::Error;
pub use model::{ChainParams, EmissionVector, TriJacobian};
pub use solver::{ContractionCertificate, SolveOptions};
