//! Per-node transition kernels `F_t^n` and ground-truth graph evolution.
//!
//! A kernel is column-stochastic: entry `(i, j)` is the probability of moving
//! from row state `j` to row state `i`. Kernels whose edges evolve
//! independently are stored as `N-1` two-by-two blocks and applied with one
//! butterfly pass per edge slot in `O(I·(N-1))`; arbitrary row-level kernels
//! are stored densely.

use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_probability, Error, Result};
use crate::filter::NodeBelief;
use crate::state::{
    check_order, gather, scatter, state_space_size, state_to_index, GraphSnapshot, NodeId,
    RowState, RowStateIndex,
};

/// Largest state count for which a dense `I × I` kernel is materialized.
pub const MAX_DENSE_STATES: usize = 65_536;

/// Below this flip probability dense entries are evaluated in log space.
const LOG_SPACE_FLIP_THRESHOLD: f64 = 1e-3;

/// Two-state Markov chain of a single edge slot.
///
/// `p01` is the probability that an absent edge appears, `p10` that a
/// present edge disappears. The staying probabilities are the complements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMarkov {
    pub p01: f64,
    pub p10: f64,
}

impl EdgeMarkov {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        check_probability("p01", p01)?;
        check_probability("p10", p10)?;
        Ok(EdgeMarkov { p01, p10 })
    }

    /// Symmetric flip with probability `p`.
    pub fn flip(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    /// `P(next = to | current = from)`.
    #[inline]
    pub fn prob(&self, to: bool, from: bool) -> f64 {
        match (from, to) {
            (false, false) => 1.0 - self.p01,
            (false, true) => self.p01,
            (true, false) => self.p10,
            (true, true) => 1.0 - self.p10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    Identity,
    /// Every edge slot flips independently with probability `p_c`.
    Flip {
        p_c: f64,
    },
    /// Independent per-slot chains, indexed by state bit.
    EdgeWise(Vec<EdgeMarkov>),
    /// Whole-row closure to the empty row with optional reopening.
    Closure {
        p_e: f64,
        p_r: f64,
        nominal: RowStateIndex,
    },
    /// Row-major `I × I` matrix; entry `[to * I + from]`.
    Dense(Vec<f64>),
}

/// Transition operator for the row belief of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    node: NodeId,
    order: usize,
    form: KernelForm,
}

impl TransitionKernel {
    pub fn identity(node: NodeId, order: usize) -> Result<Self> {
        Self::with_form(node, order, KernelForm::Identity)
    }

    /// Periodic-flip kernel: `F[i][j] = p_c^d (1 - p_c)^(N-1-d)` with `d` the
    /// Hamming distance between states `i` and `j`.
    pub fn flip(node: NodeId, order: usize, p_c: f64) -> Result<Self> {
        check_probability("p_c", p_c)?;
        Self::with_form(node, order, KernelForm::Flip { p_c })
    }

    /// Independent edge chains, one per non-owner column in ascending
    /// column order.
    pub fn edgewise(node: NodeId, order: usize, params: Vec<EdgeMarkov>) -> Result<Self> {
        check_order(order)?;
        if params.len() != order - 1 {
            return Err(Error::Dimension {
                context: "edge-wise kernel parameters",
                expected: order - 1,
                actual: params.len(),
            });
        }
        for p in &params {
            EdgeMarkov::new(p.p01, p.p10)?;
        }
        Self::with_form(node, order, KernelForm::EdgeWise(params))
    }

    /// Closure kernel: any row empties with probability `p_e`; the empty row
    /// returns to `nominal_row` with probability `p_r`.
    pub fn closure(
        node: NodeId,
        order: usize,
        p_e: f64,
        p_r: f64,
        nominal_row: &RowState,
    ) -> Result<Self> {
        check_probability("p_e", p_e)?;
        check_probability("p_r", p_r)?;
        if nominal_row.owner() != node {
            return Err(Error::Dimension {
                context: "closure nominal row owner",
                expected: node.0,
                actual: nominal_row.owner().0,
            });
        }
        if nominal_row.order() != order {
            return Err(Error::Dimension {
                context: "closure nominal row length",
                expected: order,
                actual: nominal_row.order(),
            });
        }
        let nominal = state_to_index(nominal_row)?;
        Self::with_form(node, order, KernelForm::Closure { p_e, p_r, nominal })
    }

    /// Arbitrary row-level kernel given as a row-major `I × I` matrix with
    /// entry `[to * I + from]`. Columns must sum to one within `1e-12`.
    pub fn dense(node: NodeId, order: usize, matrix: Vec<f64>) -> Result<Self> {
        let size = state_space_size(order)?;
        if size > MAX_DENSE_STATES {
            return Err(Error::DenseTooLarge {
                states: size,
                limit: MAX_DENSE_STATES,
            });
        }
        if matrix.len() != size * size {
            return Err(Error::Dimension {
                context: "dense kernel entries",
                expected: size * size,
                actual: matrix.len(),
            });
        }
        for from in 0..size {
            let mut col = 0.0;
            for to in 0..size {
                let v = matrix[to * size + from];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Domain {
                        name: "kernel entry",
                        value: v,
                        constraint: "must be finite and non-negative",
                    });
                }
                col += v;
            }
            if (col - 1.0).abs() > 1e-12 {
                return Err(Error::Domain {
                    name: "kernel column sum",
                    value: col,
                    constraint: "columns must sum to 1 within 1e-12",
                });
            }
        }
        Self::with_form(node, order, KernelForm::Dense(matrix))
    }

    fn with_form(node: NodeId, order: usize, form: KernelForm) -> Result<Self> {
        check_order(order)?;
        NodeId::checked(node.0, order)?;
        Ok(TransitionKernel { node, order, form })
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    pub fn states(&self) -> usize {
        1 << (self.order - 1)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.form, KernelForm::Identity)
    }

    /// Per-slot 2×2 factors when the kernel factorizes over edges.
    pub fn factors(&self) -> Option<Vec<EdgeMarkov>> {
        match &self.form {
            KernelForm::Identity => Some(vec![EdgeMarkov { p01: 0.0, p10: 0.0 }; self.order - 1]),
            KernelForm::Flip { p_c } => Some(vec![
                EdgeMarkov {
                    p01: *p_c,
                    p10: *p_c
                };
                self.order - 1
            ]),
            KernelForm::EdgeWise(p) => Some(p.clone()),
            KernelForm::Closure { .. } | KernelForm::Dense(_) => None,
        }
    }

    /// `P(x_t = to | x_{t-1} = from)`.
    pub fn entry(&self, to: RowStateIndex, from: RowStateIndex) -> f64 {
        let (i, j) = (to.0, from.0);
        match &self.form {
            KernelForm::Identity => (i == j) as u8 as f64,
            KernelForm::Flip { p_c } => flip_entry(to.hamming(from), self.order, *p_c),
            KernelForm::EdgeWise(params) => params
                .iter()
                .enumerate()
                .map(|(k, p)| p.prob((i >> k) & 1 == 1, (j >> k) & 1 == 1))
                .product(),
            KernelForm::Closure { p_e, p_r, nominal } => closure_entry(i, j, *p_e, *p_r, nominal.0),
            KernelForm::Dense(m) => m[i as usize * self.states() + j as usize],
        }
    }

    /// Materializes the row-major `I × I` matrix.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let size = self.states();
        if size > MAX_DENSE_STATES {
            return Err(Error::DenseTooLarge {
                states: size,
                limit: MAX_DENSE_STATES,
            });
        }
        if let KernelForm::Dense(m) = &self.form {
            return Ok(m.clone());
        }
        let mut out = vec![0.0; size * size];
        for to in 0..size {
            for from in 0..size {
                out[to * size + from] =
                    self.entry(RowStateIndex(to as u64), RowStateIndex(from as u64));
            }
        }
        Ok(out)
    }

    /// Overwrites `probs` with `F · probs`.
    pub fn apply_in_place(&self, probs: &mut [f64]) -> Result<()> {
        let size = self.states();
        if probs.len() != size {
            return Err(Error::Dimension {
                context: "kernel apply",
                expected: size,
                actual: probs.len(),
            });
        }
        match &self.form {
            KernelForm::Identity => {}
            KernelForm::Flip { p_c } => {
                let e = EdgeMarkov {
                    p01: *p_c,
                    p10: *p_c,
                };
                for slot in 0..self.order - 1 {
                    butterfly(probs, slot, &e);
                }
            }
            KernelForm::EdgeWise(params) => {
                for (slot, e) in params.iter().enumerate() {
                    butterfly(probs, slot, e);
                }
            }
            KernelForm::Closure { p_e, p_r, nominal } => {
                let b0 = probs[0];
                let mut moved = 0.0;
                for p in probs[1..].iter_mut() {
                    let leaving = *p_e * *p;
                    moved += leaving;
                    *p -= leaving;
                }
                let reopening = if nominal.0 == 0 { 0.0 } else { *p_r * b0 };
                probs[0] = (b0 - reopening) + moved;
                probs[nominal.as_usize()] += reopening;
            }
            KernelForm::Dense(m) => {
                let src = probs.to_vec();
                for (to, out) in probs.iter_mut().enumerate() {
                    let row = &m[to * size..(to + 1) * size];
                    *out = row.iter().zip(&src).map(|(k, b)| k * b).sum();
                }
            }
        }
        Ok(())
    }

    /// Draws the next row state given the current one.
    pub fn sample_next<R: Rng + ?Sized>(&self, from: RowStateIndex, rng: &mut R) -> RowStateIndex {
        match &self.form {
            KernelForm::Identity => from,
            KernelForm::Flip { p_c } => {
                let mut next = from.0;
                for slot in 0..self.order - 1 {
                    if rng.random_bool(*p_c) {
                        next ^= 1 << slot;
                    }
                }
                RowStateIndex(next)
            }
            KernelForm::EdgeWise(params) => {
                let mut next = from.0;
                for (slot, e) in params.iter().enumerate() {
                    let present = (from.0 >> slot) & 1 == 1;
                    let p_switch = if present { e.p10 } else { e.p01 };
                    if rng.random_bool(p_switch) {
                        next ^= 1 << slot;
                    }
                }
                RowStateIndex(next)
            }
            KernelForm::Closure { p_e, p_r, nominal } => {
                let u: f64 = rng.random();
                if from.0 == 0 {
                    if u < *p_r {
                        *nominal
                    } else {
                        from
                    }
                } else if u < *p_e {
                    RowStateIndex(0)
                } else {
                    from
                }
            }
            KernelForm::Dense(m) => {
                let size = self.states();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut last_positive = from.0;
                for to in 0..size {
                    let p = m[to * size + from.as_usize()];
                    if p > 0.0 {
                        last_positive = to as u64;
                    }
                    acc += p;
                    if u < acc {
                        return RowStateIndex(to as u64);
                    }
                }
                RowStateIndex(last_positive)
            }
        }
    }
}

/// Flip-kernel entry `p^d (1-p)^(N-1-d)`.
fn flip_entry(distance: u32, order: usize, p_c: f64) -> f64 {
    let slots = order as u32 - 1;
    let stay = slots - distance;
    if p_c == 0.0 {
        return (distance == 0) as u8 as f64;
    }
    if p_c == 1.0 {
        return (stay == 0) as u8 as f64;
    }
    if p_c < LOG_SPACE_FLIP_THRESHOLD {
        libm::exp(distance as f64 * libm::log(p_c) + stay as f64 * libm::log1p(-p_c))
    } else {
        libm::pow(p_c, distance as f64) * libm::pow(1.0 - p_c, stay as f64)
    }
}

fn closure_entry(to: u64, from: u64, p_e: f64, p_r: f64, nominal: u64) -> f64 {
    if from == 0 {
        if nominal == 0 {
            return (to == 0) as u8 as f64;
        }
        if to == nominal {
            p_r
        } else if to == 0 {
            1.0 - p_r
        } else {
            0.0
        }
    } else if to == 0 {
        p_e
    } else if to == from {
        1.0 - p_e
    } else {
        0.0
    }
}

/// Applies the 2×2 block of `slot` to every pair of states differing only
/// in that bit.
#[inline]
fn butterfly(probs: &mut [f64], slot: usize, e: &EdgeMarkov) {
    let (a00, a01, a10, a11) = (1.0 - e.p01, e.p10, e.p01, 1.0 - e.p10);
    let stride = 1usize << slot;
    for block in probs.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (b0, b1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*b0, *b1);
            *b0 = a00 * x0 + a01 * x1;
            *b1 = a10 * x0 + a11 * x1;
        }
    }
}

/// Returns `F · b` as a new belief.
pub fn kernel_apply(kernel: &TransitionKernel, belief: &NodeBelief) -> Result<NodeBelief> {
    let mut probs = belief.probs().to_vec();
    kernel.apply_in_place(&mut probs)?;
    Ok(NodeBelief::from_raw(belief.owner(), probs))
}

/// How the graph (and the filter's model of it) evolves between steps.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsSchedule {
    Static,
    /// Every `period` steps (at `t mod period == 0`), each off-diagonal entry
    /// flips independently with probability `p_c`.
    PeriodicFlip {
        period: usize,
        p_c: f64,
    },
    /// Each step a row empties with probability `p_e`; an empty row returns
    /// to its `nominal` value with probability `p_r`.
    Closure {
        p_e: f64,
        p_r: f64,
        nominal: GraphSnapshot,
    },
    /// Explicit per-step kernel sets: step `t` uses entry `(t - 1) mod len`,
    /// each entry holding one kernel per node.
    Custom(Vec<Vec<TransitionKernel>>),
}

impl DynamicsSchedule {
    pub fn validate(&self, order: usize) -> Result<()> {
        check_order(order)?;
        match self {
            DynamicsSchedule::Static => Ok(()),
            DynamicsSchedule::PeriodicFlip { period, p_c } => {
                if *period == 0 {
                    return Err(Error::Domain {
                        name: "period",
                        value: 0.0,
                        constraint: "must be at least 1",
                    });
                }
                check_probability("p_c", *p_c)
            }
            DynamicsSchedule::Closure { p_e, p_r, nominal } => {
                check_probability("p_e", *p_e)?;
                check_probability("p_r", *p_r)?;
                if nominal.order() != order {
                    return Err(Error::Dimension {
                        context: "closure nominal graph",
                        expected: order,
                        actual: nominal.order(),
                    });
                }
                Ok(())
            }
            DynamicsSchedule::Custom(steps) => {
                if steps.is_empty() {
                    return Err(Error::Dimension {
                        context: "custom schedule steps",
                        expected: 1,
                        actual: 0,
                    });
                }
                for set in steps {
                    if set.len() != order {
                        return Err(Error::Dimension {
                            context: "custom schedule kernels per step",
                            expected: order,
                            actual: set.len(),
                        });
                    }
                    for (n, k) in set.iter().enumerate() {
                        if k.node.0 != n || k.order != order {
                            return Err(Error::Dimension {
                                context: "custom schedule kernel node",
                                expected: n,
                                actual: k.node.0,
                            });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// True when step `t` can change the graph under this schedule.
    pub fn is_change_step(&self, t: usize) -> bool {
        match self {
            DynamicsSchedule::Static => false,
            DynamicsSchedule::PeriodicFlip { period, p_c } => {
                *p_c > 0.0 && t.is_multiple_of(*period)
            }
            DynamicsSchedule::Closure { .. } | DynamicsSchedule::Custom(_) => true,
        }
    }

    /// One kernel per node for the transition into step `t`.
    pub fn kernels_at(&self, t: usize, order: usize) -> Result<Cow<'_, [TransitionKernel]>> {
        let owned = |f: &dyn Fn(NodeId) -> Result<TransitionKernel>| {
            (0..order)
                .map(|n| f(NodeId(n)))
                .collect::<Result<Vec<_>>>()
                .map(Cow::Owned)
        };
        match self {
            DynamicsSchedule::Static => owned(&|n| TransitionKernel::identity(n, order)),
            DynamicsSchedule::PeriodicFlip { period, p_c } => {
                if t.is_multiple_of(*period) {
                    owned(&|n| TransitionKernel::flip(n, order, *p_c))
                } else {
                    owned(&|n| TransitionKernel::identity(n, order))
                }
            }
            DynamicsSchedule::Closure { p_e, p_r, nominal } => {
                if nominal.order() != order {
                    return Err(Error::Dimension {
                        context: "closure nominal graph",
                        expected: order,
                        actual: nominal.order(),
                    });
                }
                owned(&|n| TransitionKernel::closure(n, order, *p_e, *p_r, &nominal.row(n)))
            }
            DynamicsSchedule::Custom(steps) => {
                let set = &steps[t.saturating_sub(1) % steps.len()];
                if set.len() != order {
                    return Err(Error::Dimension {
                        context: "custom schedule kernels per step",
                        expected: order,
                        actual: set.len(),
                    });
                }
                Ok(Cow::Borrowed(set.as_slice()))
            }
        }
    }
}

/// Draws `A_t` from `A_{t-1}` under the schedule.
pub fn sample_next_graph<R: Rng + ?Sized>(
    graph: &GraphSnapshot,
    schedule: &DynamicsSchedule,
    t: usize,
    rng: &mut R,
) -> Result<GraphSnapshot> {
    let order = graph.order();
    schedule.validate(order)?;
    let mut next = graph.clone();
    match schedule {
        DynamicsSchedule::Static => {}
        DynamicsSchedule::PeriodicFlip { period, p_c } => {
            if t.is_multiple_of(*period) {
                for row in 0..order {
                    let mut mask = graph.row_mask(NodeId(row));
                    for col in (0..order).filter(|&c| c != row) {
                        if rng.random_bool(*p_c) {
                            mask ^= 1 << col;
                        }
                    }
                    next.set_row_mask(NodeId(row), mask);
                }
            }
        }
        DynamicsSchedule::Closure { p_e, p_r, nominal } => {
            for row in 0..order {
                let node = NodeId(row);
                let u: f64 = rng.random();
                if graph.row_mask(node) == 0 {
                    if u < *p_r {
                        next.set_row_mask(node, nominal.row_mask(node));
                    }
                } else if u < *p_e {
                    next.set_row_mask(node, 0);
                }
            }
        }
        DynamicsSchedule::Custom(_) => {
            let kernels = schedule.kernels_at(t, order)?;
            for (row, k) in kernels.iter().enumerate() {
                let node = NodeId(row);
                let from = RowStateIndex(gather(row, graph.row_mask(node)));
                let to = k.sample_next(from, rng);
                next.set_row_mask(node, scatter(row, to.0));
            }
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::index_to_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_column_stochastic(k: &TransitionKernel) {
        let m = k.to_dense().unwrap();
        let size = k.states();
        for from in 0..size {
            let s: f64 = (0..size).map(|to| m[to * size + from]).sum();
            assert!((s - 1.0).abs() < 1e-12, "column {from} sums to {s}");
            assert!((0..size).all(|to| m[to * size + from] >= 0.0));
        }
    }

    fn dense_matvec(m: &[f64], b: &[f64]) -> Vec<f64> {
        let size = b.len();
        (0..size)
            .map(|i| (0..size).map(|j| m[i * size + j] * b[j]).sum())
            .collect()
    }

    fn random_simplex(rng: &mut ChaCha8Rng, size: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    #[test]
    fn flip_kernel_entries() {
        let k = TransitionKernel::flip(NodeId(0), 3, 0.2).unwrap();
        // states 0b00 and 0b01 differ in one slot
        let e = k.entry(RowStateIndex(1), RowStateIndex(0));
        assert!((e - 0.16).abs() < 1e-15);
        let e = k.entry(RowStateIndex(3), RowStateIndex(0));
        assert!((e - 0.04).abs() < 1e-15);
        let e = k.entry(RowStateIndex(2), RowStateIndex(2));
        assert!((e - 0.64).abs() < 1e-15);
        assert_eq!(
            k.factors().unwrap(),
            vec![EdgeMarkov::flip(0.2).unwrap(); 2]
        );
        assert!(TransitionKernel::flip(NodeId(0), 3, 1.2).is_err());
    }

    #[test]
    fn flip_kernel_zero_is_identity() {
        let k = TransitionKernel::flip(NodeId(1), 4, 0.0).unwrap();
        let m = k.to_dense().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(m[i * 8 + j], (i == j) as u8 as f64);
            }
        }
    }

    #[test]
    fn flip_kernel_small_probability_uses_log_space_without_underflow() {
        let k = TransitionKernel::flip(NodeId(0), 20, 1e-6).unwrap();
        let top = (1u64 << 19) - 1;
        let e = k.entry(RowStateIndex(top), RowStateIndex(0));
        let expected = libm::exp(19.0 * libm::log(1e-6));
        assert!(e > 0.0);
        assert!(((e - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn constructed_kernels_are_column_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for order in 2..=6 {
            for n in 0..order {
                let node = NodeId(n);
                assert_column_stochastic(&TransitionKernel::flip(node, order, 0.3).unwrap());
                let params: Vec<_> = (0..order - 1)
                    .map(|_| EdgeMarkov::new(rng.random(), rng.random()).unwrap())
                    .collect();
                assert_column_stochastic(&TransitionKernel::edgewise(node, order, params).unwrap());
                let nominal = index_to_state(node, RowStateIndex(1), order).unwrap();
                assert_column_stochastic(
                    &TransitionKernel::closure(node, order, 0.1, 0.3, &nominal).unwrap(),
                );
            }
        }
    }

    #[test]
    fn flip_kernel_symmetric_and_fixes_uniform() {
        let k = TransitionKernel::flip(NodeId(2), 5, 0.37).unwrap();
        let m = k.to_dense().unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(m[i * 16 + j], m[j * 16 + i]);
            }
        }
        let mut b = vec![1.0 / 16.0; 16];
        k.apply_in_place(&mut b).unwrap();
        assert!(b.iter().all(|&x| (x - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn edgewise_specializations() {
        let params = vec![EdgeMarkov::flip(0.25).unwrap(); 3];
        let e = TransitionKernel::edgewise(NodeId(0), 4, params).unwrap();
        let f = TransitionKernel::flip(NodeId(0), 4, 0.25).unwrap();
        for (a, b) in e.to_dense().unwrap().iter().zip(f.to_dense().unwrap()) {
            assert!((a - b).abs() < 1e-15);
        }
        let still =
            TransitionKernel::edgewise(NodeId(1), 3, vec![EdgeMarkov::new(0.0, 0.0).unwrap(); 2])
                .unwrap();
        let m = still.to_dense().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i * 4 + j], (i == j) as u8 as f64);
            }
        }
        assert!(matches!(
            TransitionKernel::edgewise(NodeId(0), 4, vec![EdgeMarkov::flip(0.1).unwrap(); 2]),
            Err(Error::Dimension {
                expected: 3,
                actual: 2,
                ..
            })
        ));
    }

    #[test]
    fn edgewise_deterministic_switches_match_brute_force() {
        // slot 0: always appears, slot 1: always disappears
        let params = vec![
            EdgeMarkov::new(1.0, 0.0).unwrap(),
            EdgeMarkov::new(0.0, 1.0).unwrap(),
        ];
        let k = TransitionKernel::edgewise(NodeId(2), 3, params).unwrap();
        let m = k.to_dense().unwrap();
        // from state (b0, b1): next is (1, 0) = index 1 regardless of start
        let expected = [
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 1.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for to in 0..4 {
            for from in 0..4 {
                assert_eq!(m[to * 4 + from], expected[to][from]);
            }
        }
    }

    #[test]
    fn closure_kernel_examples() {
        let nominal = RowState::from_bits(NodeId(1), &[1, 0, 1]).unwrap();
        let k = TransitionKernel::closure(NodeId(1), 3, 0.1, 0.5, &nominal).unwrap();
        let m = k.to_dense().unwrap();
        // column of the zero state
        assert_eq!(m[0], 0.5);
        assert_eq!(m[3 * 4], 0.5);
        assert_eq!(m[4], 0.0);
        assert_eq!(m[2 * 4], 0.0);
        // column of state 2
        assert!((m[2 * 4 + 2] - 0.9).abs() < 1e-15);
        assert!((m[2] - 0.1).abs() < 1e-15);

        let frozen = TransitionKernel::closure(NodeId(1), 3, 0.0, 0.0, &nominal).unwrap();
        let m = frozen.to_dense().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i * 4 + j], (i == j) as u8 as f64);
            }
        }

        let forced = TransitionKernel::closure(NodeId(1), 3, 1.0, 0.0, &nominal).unwrap();
        let m = forced.to_dense().unwrap();
        for j in 1..4 {
            assert_eq!(m[j], 1.0);
        }
        let wrong_owner = RowState::from_bits(NodeId(0), &[0, 1, 1]).unwrap();
        assert!(TransitionKernel::closure(NodeId(1), 3, 0.1, 0.0, &wrong_owner).is_err());
    }

    #[test]
    fn structured_apply_matches_dense_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in 2..=10 {
            let size = 1 << (order - 1);
            let node = NodeId(order / 2);
            let params: Vec<_> = (0..order - 1)
                .map(|_| EdgeMarkov::new(rng.random(), rng.random()).unwrap())
                .collect();
            let nominal = index_to_state(node, RowStateIndex(size as u64 - 1), order).unwrap();
            let kernels = [
                TransitionKernel::identity(node, order).unwrap(),
                TransitionKernel::flip(node, order, 0.2).unwrap(),
                TransitionKernel::edgewise(node, order, params).unwrap(),
                TransitionKernel::closure(node, order, 0.1, 0.4, &nominal).unwrap(),
            ];
            for k in &kernels {
                let b = random_simplex(&mut rng, size);
                let oracle = dense_matvec(&k.to_dense().unwrap(), &b);
                let mut fast = b.clone();
                k.apply_in_place(&mut fast).unwrap();
                for (x, y) in fast.iter().zip(&oracle) {
                    assert!((x - y).abs() < 1e-12);
                }
                let s: f64 = fast.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_kernel_validation_and_apply() {
        let m = vec![0.5, 0.2, 0.5, 0.8];
        let k = TransitionKernel::dense(NodeId(0), 2, m).unwrap();
        let mut b = vec![0.25, 0.75];
        k.apply_in_place(&mut b).unwrap();
        assert!((b[0] - (0.125 + 0.15)).abs() < 1e-15);
        assert!(TransitionKernel::dense(NodeId(0), 2, vec![0.5, 0.2, 0.4, 0.8]).is_err());
        assert!(TransitionKernel::dense(NodeId(0), 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            TransitionKernel::flip(NodeId(0), 18, 0.1)
                .unwrap()
                .to_dense(),
            Err(Error::DenseTooLarge { .. })
        ));
        assert!(matches!(
            k.apply_in_place(&mut [1.0, 0.0, 0.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn static_and_non_change_steps_leave_graph_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GraphSnapshot::from_dense(&[[0u8, 1, 1], [0, 0, 1], [1, 0, 0]]).unwrap();
        let next = sample_next_graph(&g, &DynamicsSchedule::Static, 5, &mut rng).unwrap();
        assert_eq!(next, g);
        let sched = DynamicsSchedule::PeriodicFlip {
            period: 200,
            p_c: 0.2,
        };
        assert_eq!(sample_next_graph(&g, &sched, 1, &mut rng).unwrap(), g);
    }

    #[test]
    fn forced_flip_complements_off_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GraphSnapshot::from_dense(&[[0u8, 1, 1], [0, 0, 1], [1, 0, 0]]).unwrap();
        let sched = DynamicsSchedule::PeriodicFlip {
            period: 4,
            p_c: 1.0,
        };
        let next = sample_next_graph(&g, &sched, 8, &mut rng).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert_ne!(next.get(r, c), g.get(r, c));
                } else {
                    assert!(!next.get(r, c));
                }
            }
        }
    }

    #[test]
    fn empirical_flip_frequency_matches_p_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let p_c = 0.2;
        let sched = DynamicsSchedule::PeriodicFlip { period: 1, p_c };
        let mut g = GraphSnapshot::empty(5).unwrap();
        let mut flips = 0usize;
        let mut events = 0usize;
        while events < 10_000 {
            let next = sample_next_graph(&g, &sched, 1, &mut rng).unwrap();
            for r in 0..5 {
                for c in (0..5).filter(|&c| c != r) {
                    flips += (next.get(r, c) != g.get(r, c)) as usize;
                    events += 1;
                }
            }
            g = next;
        }
        let freq = flips as f64 / events as f64;
        let se = libm::sqrt(p_c * (1.0 - p_c) / events as f64);
        assert!((freq - p_c).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn closure_sampler_zeroes_and_reopens() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nominal = GraphSnapshot::complete(4).unwrap();
        let close = DynamicsSchedule::Closure {
            p_e: 1.0,
            p_r: 0.0,
            nominal: nominal.clone(),
        };
        let g = sample_next_graph(&nominal, &close, 1, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 0);
        let reopen = DynamicsSchedule::Closure {
            p_e: 0.0,
            p_r: 1.0,
            nominal: nominal.clone(),
        };
        assert_eq!(
            sample_next_graph(&g, &reopen, 2, &mut rng).unwrap(),
            nominal
        );
    }

    #[test]
    fn custom_schedule_samples_from_its_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let order = 3;
        let set: Vec<_> = (0..order)
            .map(|n| {
                TransitionKernel::edgewise(
                    NodeId(n),
                    order,
                    vec![EdgeMarkov::new(1.0, 0.0).unwrap(); order - 1],
                )
                .unwrap()
            })
            .collect();
        let sched = DynamicsSchedule::Custom(vec![set]);
        let g = sample_next_graph(&GraphSnapshot::empty(3).unwrap(), &sched, 1, &mut rng).unwrap();
        assert_eq!(g, GraphSnapshot::complete(3).unwrap());
        assert!(matches!(
            sched.kernels_at(7, order).unwrap(),
            Cow::Borrowed(_)
        ));
    }
}
