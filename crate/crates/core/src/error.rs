use thiserror::Error;

/// Errors raised by the core tracker.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph order {order} outside supported range [{min}, {max}]")]
    SizeLimit {
        order: usize,
        min: usize,
        max: usize,
    },

    #[error("index {index} out of range for {bound} states")]
    IndexOutOfRange { index: u64, bound: u64 },

    #[error("node {node} out of range for graph order {order}")]
    NodeOutOfRange { node: usize, order: usize },

    #[error("row owned by node {owner} has its self-loop bit set")]
    SelfLoop { owner: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{name} = {value} is outside its valid domain ({constraint})")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("invalid probability vector for node {node}: {reason}")]
    InvalidSimplex { node: usize, reason: &'static str },

    #[error("dense kernel with {states} states exceeds the materialization limit of {limit}")]
    DenseTooLarge { states: usize, limit: usize },

    #[error("non-finite value in {context} at timestep {t}")]
    NonFinite { context: &'static str, t: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint: "must lie in [0, 1]",
        })
    }
}
