//! Strategic communication over a noisy channel with decoder side information.
//!
//! An encoder observes a source `U`, a decoder observes a correlated state `Z`
//! plus the channel output, and both act on distinct utility tables. The encoder
//! commits to its coding strategy and the decoder best-responds. This crate
//! computes the encoder's optimal long-run utility three ways (direct search
//! over disclosure kernels, a grid linear program over posterior splittings,
//! and its Lagrangian dual), and simulates the finite-blocklength Wyner-Ziv
//! construction that achieves it.
//!
//! The crate is `no_std` (it needs `alloc`). Enable `parallel` to evaluate grids
//! and Monte Carlo trials with rayon, and `serde` to serialize result types.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod binary;
pub mod capacity;
pub mod concavify;
mod error;
pub mod game;
pub mod lp;
mod par;
pub mod prob;
pub mod sim;

pub use crate::capacity::{capacity, CapacityResult};
pub use crate::concavify::{GridSpec, Method, SolveResult};
pub use crate::error::Error;
pub use crate::game::{Belief, DisclosureKernel, Scenario, Splitting, UtilityTable};
pub use crate::prob::{Alphabet, Dist, Joint, Kernel};

/// Validity tolerance for probability masses.
pub const PROB_TOL: f64 = 1e-12;

/// Decoder utilities within this distance of the maximum count as ties.
pub const TIE_TOL: f64 = 1e-9;

/// Slack allowed on the information constraint, in bits.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub type Result<T, E = Error> = core::result::Result<T, E>;
