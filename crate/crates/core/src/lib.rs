//! Exact dynamics of a qubit dephasing against a thermal Ising chain.
//!
//! The bath is a periodic nearest-neighbour Ising chain of `N` spins in a
//! longitudinal field, prepared in its Gibbs state. The qubit couples to the
//! bath magnetization through `alpha sigma_z (x) sum_i sigma_z^i`, so the
//! evolution is a pure-dephasing channel whose coherence factor is a ratio of
//! complex-field partition functions.
//!
//! Modules:
//! - [`bath`]: Ising chain, Gibbs weights, transfer-matrix partition functions, purity.
//! - [`lee_yang`]: fugacity polynomial, Lee-Yang zeros, critical times.
//! - [`dephasing`]: decoherence function, qubit evolution, Kraus operators.
//! - [`witnesses`]: trace-distance (BLP) witness and past-future correlator.
//! - [`env_info`]: system-fragment states, mutual information, spectrum broadcast structure.

// `!(x > 0.0)` is used deliberately so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod dephasing;
pub mod env_info;
pub mod error;
pub mod lee_yang;
pub mod witnesses;

pub use bath::{BathParams, Boundary, LogComplex, SpinConfig, TransferMatrix};
pub use dephasing::{QubitDensity, SystemParams};
pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
