//! Point estimates and uncertainty summaries of row beliefs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filter::NodeBelief;
use crate::math::pairwise_sum;
use crate::state::{scatter, slot_column, GraphSnapshot, NodeId, RowStateIndex};

/// Estimated adjacency row of one node; entry `owner` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEstimate {
    pub owner: NodeId,
    pub values: Vec<f64>,
    /// Set for MAP estimates.
    pub map_index: Option<RowStateIndex>,
}

/// Posterior mean row `Σ_i b_i a_i`.
pub fn expected_row(belief: &NodeBelief) -> RowEstimate {
    let owner = belief.owner();
    let order = belief.order();
    let mut values = vec![0.0; order];
    for (i, &p) in belief.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mask = scatter(owner.0, i as u64);
        for (c, v) in values.iter_mut().enumerate() {
            if mask & (1 << c) != 0 {
                *v += p;
            }
        }
    }
    RowEstimate {
        owner,
        values,
        map_index: None,
    }
}

/// Row state with the largest posterior probability; ties go to the lowest
/// index.
pub fn map_row(belief: &NodeBelief) -> RowEstimate {
    let owner = belief.owner();
    let order = belief.order();
    let mut best = 0usize;
    for (i, &p) in belief.probs().iter().enumerate() {
        if p > belief.probs()[best] {
            best = i;
        }
    }
    let mask = scatter(owner.0, best as u64);
    RowEstimate {
        owner,
        values: (0..order).map(|c| ((mask >> c) & 1) as f64).collect(),
        map_index: Some(RowStateIndex(best as u64)),
    }
}

/// Marginal probability of each incoming edge.
///
/// Marginalizes one state bit at a time by folding the belief in half, so it
/// never expands states into rows.
pub fn edge_marginals(belief: &NodeBelief) -> Vec<f64> {
    let owner = belief.owner().0;
    let order = belief.order();
    let mut out = vec![0.0; order];
    let probs = belief.probs();
    for slot in 0..order - 1 {
        let stride = 1usize << slot;
        let mass: f64 = probs
            .chunks_exact(2 * stride)
            .map(|block| block[stride..].iter().sum::<f64>())
            .sum();
        out[slot_column(owner, slot)] = mass;
    }
    out
}

/// Shannon entropy in nats, with `0 · log 0 = 0`.
///
/// Terms are summed pairwise, so the uniform belief gives exactly
/// `-log(1 / I)`.
pub fn belief_entropy(belief: &NodeBelief) -> f64 {
    let terms: Vec<f64> = belief
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { p * libm::log(p) } else { 0.0 })
        .collect();
    -pairwise_sum(&terms)
}

/// Normalized state error `Σ_n ‖â_n − A[n,:]‖² / ‖A[n,:]‖²`.
///
/// An empty true row has no norm; its denominator is taken as 1, so the
/// term is the raw squared error.
pub fn state_error(estimates: &[RowEstimate], truth: &GraphSnapshot) -> Result<f64> {
    let order = truth.order();
    if estimates.len() != order {
        return Err(Error::Dimension {
            context: "row estimates",
            expected: order,
            actual: estimates.len(),
        });
    }
    let mut total = 0.0;
    for (n, est) in estimates.iter().enumerate() {
        if est.values.len() != order {
            return Err(Error::Dimension {
                context: "row estimate length",
                expected: order,
                actual: est.values.len(),
            });
        }
        total += row_error(&est.values, truth, n);
    }
    Ok(total)
}

/// Same metric for a dense real-valued `N × N` estimate (row-major).
pub fn matrix_state_error(estimate: &[f64], truth: &GraphSnapshot) -> Result<f64> {
    let order = truth.order();
    if estimate.len() != order * order {
        return Err(Error::Dimension {
            context: "matrix estimate",
            expected: order * order,
            actual: estimate.len(),
        });
    }
    Ok(estimate
        .chunks_exact(order)
        .enumerate()
        .map(|(n, row)| row_error(row, truth, n))
        .sum())
}

fn row_error(row: &[f64], truth: &GraphSnapshot, n: usize) -> f64 {
    let mut num = 0.0;
    let mut norm = 0.0;
    for (c, &v) in row.iter().enumerate() {
        let a = truth.get(n, c) as u8 as f64;
        num += (v - a) * (v - a);
        norm += a;
    }
    if norm == 0.0 {
        num
    } else {
        num / norm
    }
}
