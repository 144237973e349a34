//! Row-factorized Bayesian filter.
//!
//! One belief vector of length `I = 2^(N-1)` is kept per node. A step runs
//! the prediction `b ← F b` and then the Bayes update with the Gaussian
//! likelihood `N(y[n]; a_i · z, σ²)`. The update is carried out in log space
//! and normalized by log-sum-exp, so the belief stays exact even when every
//! individual likelihood underflows.
//!
//! Nodes never interact: with the `parallel` feature they are processed on
//! rayon, and each node's arithmetic is identical to the sequential path.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::belief_entropy;
use crate::math::{gaussian_log_pdf, log_sum_exp, normalize};
use crate::state::{
    check_order, slot_column, state_space_size, GraphSnapshot, NodeId, RowStateIndex,
};
use crate::transition::TransitionKernel;

/// Tolerance on the total mass of a user-supplied belief.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Probability mass function over the rows of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBelief {
    owner: NodeId,
    probs: Vec<f64>,
}

impl NodeBelief {
    pub fn uniform(owner: NodeId, order: usize) -> Result<Self> {
        let size = state_space_size(order)?;
        NodeId::checked(owner.0, order)?;
        Ok(NodeBelief {
            owner,
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point(owner: NodeId, order: usize, index: RowStateIndex) -> Result<Self> {
        let size = state_space_size(order)?;
        NodeId::checked(owner.0, order)?;
        if index.0 >= size as u64 {
            return Err(Error::IndexOutOfRange {
                index: index.0,
                bound: size as u64,
            });
        }
        let mut probs = vec![0.0; size];
        probs[index.as_usize()] = 1.0;
        Ok(NodeBelief { owner, probs })
    }

    /// Validated belief: right length, non-negative, sums to one within
    /// [`SIMPLEX_TOLERANCE`].
    pub fn new(owner: NodeId, order: usize, probs: Vec<f64>) -> Result<Self> {
        let size = state_space_size(order)?;
        NodeId::checked(owner.0, order)?;
        if probs.len() != size {
            return Err(Error::Dimension {
                context: "belief length",
                expected: size,
                actual: probs.len(),
            });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidSimplex {
                node: owner.0,
                reason: "entries must be finite and non-negative",
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidSimplex {
                node: owner.0,
                reason: "entries must sum to 1",
            });
        }
        Ok(NodeBelief { owner, probs })
    }

    pub(crate) fn from_raw(owner: NodeId, probs: Vec<f64>) -> Self {
        NodeBelief { owner, probs }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Graph order implied by the belief length.
    pub fn order(&self) -> usize {
        self.probs.len().trailing_zeros() as usize + 1
    }

    pub fn prob(&self, index: RowStateIndex) -> f64 {
        self.probs[index.as_usize()]
    }

    /// States carrying more than `floor` probability, in index order.
    pub fn support_above(&self, floor: f64) -> impl Iterator<Item = (RowStateIndex, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p > floor)
            .map(|(i, &p)| (RowStateIndex(i as u64), p))
    }
}

/// Initial belief of every node.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Uniform,
    /// All mass on the rows of the given graph.
    Point(GraphSnapshot),
    /// One probability vector per node.
    Custom(Vec<Vec<f64>>),
}

/// Input and output graph signals of one timestep, `y = A z + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPair {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl ObservationPair {
    pub fn new(z: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if z.len() != y.len() {
            return Err(Error::Dimension {
                context: "observation output length",
                expected: z.len(),
                actual: y.len(),
            });
        }
        if let Some(v) = z.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::Domain {
                name: "signal value",
                value: *v,
                constraint: "must be finite",
            });
        }
        Ok(ObservationPair { z, y })
    }

    pub fn order(&self) -> usize {
        self.z.len()
    }
}

/// Outcome of the Bayes update for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeUpdate {
    /// `log p(y[n] | past)`, the normalizer of the update.
    pub log_evidence: f64,
    /// The observation had zero likelihood under every state with prior
    /// mass; the a-priori belief was kept.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDiagnostics {
    pub node: NodeId,
    pub log_evidence: f64,
    /// Posterior entropy in nats.
    pub entropy: f64,
    pub degenerate: bool,
}

/// Diagnostics of one filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t: usize,
    pub nodes: Vec<NodeDiagnostics>,
}

impl StepReport {
    pub fn degenerate_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|d| d.degenerate).map(|d| d.node)
    }
}

/// Beliefs of all nodes after `t` processed observations.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    order: usize,
    beliefs: Vec<NodeBelief>,
    t: usize,
    sigma_obs: f64,
}

/// Builds the initial filter state at `t = 0`.
pub fn init_beliefs(order: usize, prior: &Prior, sigma_obs: f64) -> Result<FilterState> {
    check_order(order)?;
    if !(sigma_obs > 0.0 && sigma_obs.is_finite()) {
        return Err(Error::Domain {
            name: "sigma_obs",
            value: sigma_obs,
            constraint: "must be positive and finite",
        });
    }
    let beliefs = match prior {
        Prior::Uniform => (0..order)
            .map(|n| NodeBelief::uniform(NodeId(n), order))
            .collect::<Result<Vec<_>>>()?,
        Prior::Point(graph) => {
            if graph.order() != order {
                return Err(Error::Dimension {
                    context: "point prior graph order",
                    expected: order,
                    actual: graph.order(),
                });
            }
            (0..order)
                .map(|n| NodeBelief::point(NodeId(n), order, graph.row_index(NodeId(n))))
                .collect::<Result<Vec<_>>>()?
        }
        Prior::Custom(vectors) => {
            if vectors.len() != order {
                return Err(Error::Dimension {
                    context: "custom prior node count",
                    expected: order,
                    actual: vectors.len(),
                });
            }
            vectors
                .iter()
                .enumerate()
                .map(|(n, v)| NodeBelief::new(NodeId(n), order, v.clone()))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(FilterState {
        order,
        beliefs,
        t: 0,
        sigma_obs,
    })
}

/// `log N(y[n]; a_i^n · z, σ²)`.
pub fn log_likelihood(
    node: NodeId,
    index: RowStateIndex,
    obs: &ObservationPair,
    sigma_obs: f64,
) -> f64 {
    let mut mean = 0.0;
    let mut bits = index.0;
    while bits != 0 {
        let slot = bits.trailing_zeros() as usize;
        mean += obs.z[slot_column(node.0, slot)];
        bits &= bits - 1;
    }
    gaussian_log_pdf(obs.y[node.0], mean, sigma_obs)
}

fn predict_node(belief: &mut NodeBelief, kernel: &TransitionKernel) -> Result<()> {
    if kernel.node() != belief.owner {
        return Err(Error::Dimension {
            context: "kernel node",
            expected: belief.owner.0,
            actual: kernel.node().0,
        });
    }
    kernel.apply_in_place(&mut belief.probs)?;
    normalize(&mut belief.probs);
    Ok(())
}

fn update_node(belief: &mut NodeBelief, obs: &ObservationPair, sigma_obs: f64) -> NodeUpdate {
    let owner = belief.owner.0;
    let order = obs.order();
    let size = belief.probs.len();
    let slot_z: Vec<f64> = (0..order - 1)
        .map(|k| obs.z[slot_column(owner, k)])
        .collect();

    // a_i · z for every state, built by adding one slot to a smaller state
    let mut log_post = vec![0.0; size];
    for i in 1..size {
        log_post[i] = log_post[i & (i - 1)] + slot_z[i.trailing_zeros() as usize];
    }
    let y = obs.y[owner];
    let log_norm = -0.5 * libm::log(2.0 * core::f64::consts::PI * sigma_obs * sigma_obs);
    let inv_two_var = 1.0 / (2.0 * sigma_obs * sigma_obs);
    for (lp, &prior) in log_post.iter_mut().zip(&belief.probs) {
        let r = y - *lp;
        *lp = if prior > 0.0 {
            log_norm - r * r * inv_two_var + libm::log(prior)
        } else {
            f64::NEG_INFINITY
        };
    }
    let log_evidence = log_sum_exp(&log_post);
    if !log_evidence.is_finite() {
        return NodeUpdate {
            log_evidence,
            degenerate: true,
        };
    }
    for (p, lp) in belief.probs.iter_mut().zip(&log_post) {
        *p = libm::exp(lp - log_evidence);
    }
    normalize(&mut belief.probs);
    NodeUpdate {
        log_evidence,
        degenerate: false,
    }
}

impl FilterState {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn sigma_obs(&self) -> f64 {
        self.sigma_obs
    }

    pub fn beliefs(&self) -> &[NodeBelief] {
        &self.beliefs
    }

    pub fn belief(&self, node: NodeId) -> &NodeBelief {
        &self.beliefs[node.0]
    }

    /// Replaces every belief by `F^n b^n` (the a-priori belief of step `t + 1`).
    pub fn predict(&mut self, kernels: &[TransitionKernel]) -> Result<()> {
        if kernels.len() != self.order {
            return Err(Error::Dimension {
                context: "kernels per node",
                expected: self.order,
                actual: kernels.len(),
            });
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.beliefs
                .par_iter_mut()
                .zip(kernels)
                .try_for_each(|(b, k)| predict_node(b, k))
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.beliefs
                .iter_mut()
                .zip(kernels)
                .try_for_each(|(b, k)| predict_node(b, k))
        }
    }

    /// Bayes update of the a-priori beliefs with one observation.
    pub fn update(&mut self, obs: &ObservationPair) -> Result<Vec<NodeUpdate>> {
        if obs.order() != self.order || obs.y.len() != self.order {
            return Err(Error::Dimension {
                context: "observation length",
                expected: self.order,
                actual: obs.order(),
            });
        }
        let sigma = self.sigma_obs;
        #[cfg(feature = "parallel")]
        let out = {
            use rayon::prelude::*;
            self.beliefs
                .par_iter_mut()
                .map(|b| update_node(b, obs, sigma))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let out = self
            .beliefs
            .iter_mut()
            .map(|b| update_node(b, obs, sigma))
            .collect();
        Ok(out)
    }

    /// Prediction followed by update; advances `t` by one.
    pub fn step(
        &mut self,
        kernels: &[TransitionKernel],
        obs: &ObservationPair,
    ) -> Result<StepReport> {
        self.predict(kernels)?;
        let updates = self.update(obs)?;
        self.t += 1;
        let nodes = updates
            .iter()
            .zip(&self.beliefs)
            .map(|(u, b)| NodeDiagnostics {
                node: b.owner,
                log_evidence: u.log_evidence,
                entropy: belief_entropy(b),
                degenerate: u.degenerate,
            })
            .collect();
        Ok(StepReport { t: self.t, nodes })
    }
}
