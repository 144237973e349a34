//! Exact discrete Bayesian tracking of a time-varying, unweighted, directed
//! graph from streaming node signals.
//!
//! The adjacency matrix `A_t` is never tracked jointly. Each row (the incoming
//! edges of one node) gets its own belief over the `2^(N-1)` binary rows that
//! have a zero on the diagonal, and is filtered independently:
//!
//! ```text
//! prior_t     = F_t · posterior_{t-1}
//! posterior_t ∝ N(y_t[n]; a_i · z_t, σ²) · prior_t
//! ```
//!
//! The crate is `no_std` (with `alloc`). Enable the `parallel` feature to run
//! per-node work on rayon; results are bitwise identical to the sequential
//! order. File formats, configuration and the experiment CLI live in the
//! `netssm` companion crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod estimators;
pub mod filter;
mod math;
pub mod rng;
pub mod scenarios;
pub mod state;
pub mod transition;

pub use error::{Error, Result};
pub use filter::{FilterState, NodeBelief, ObservationPair, Prior, StepReport};
pub use state::{GraphSnapshot, NodeId, RowState, RowStateIndex};
pub use transition::{DynamicsSchedule, EdgeMarkov, TransitionKernel};
