//! File formats, run configuration and the experiment harness around
//! [`netssm_core`].

pub mod config;
pub mod error;
pub mod harness;
pub mod io;

pub use config::{MethodSpec, Overrides, RunConfig};
pub use error::{Error, Result};
pub use harness::{recovery_time, run_experiment, RunResult};
