//! Bit-level encoding of adjacency rows.
//!
//! Row `n` of `A_t` lists the incoming edges of node `n`. Because there are no
//! self-loops, column `n` is always zero and the row is one of `I = 2^(N-1)`
//! binary vectors. These are enumerated by a fixed convention: bit `k` of the
//! state index (LSB = `k = 0`) is the `k`-th column in ascending order,
//! skipping the owner column.
//!
//! ```text
//! N = 4, owner = 1:   index bit   0  1  2
//!                     column      0  2  3
//! ```
//!
//! With this convention the state index is the column mask with the owner
//! position squeezed out, so every per-edge operation is a per-bit operation.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 24;

/// A node of the tracked graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    pub fn checked(node: usize, order: usize) -> Result<Self> {
        if node < order {
            Ok(NodeId(node))
        } else {
            Err(Error::NodeOutOfRange { node, order })
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Position of a row state in the enumeration of `A^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RowStateIndex(pub u64);

impl RowStateIndex {
    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// Number of edge slots in which the two rows differ.
    #[inline]
    pub fn hamming(self, other: RowStateIndex) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

impl fmt::Display for RowStateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if (MIN_ORDER..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::SizeLimit {
            order,
            min: MIN_ORDER,
            max: MAX_ORDER,
        })
    }
}

/// Number of admissible rows per node, `2^(N-1)`.
pub fn state_space_size(order: usize) -> Result<usize> {
    check_order(order)?;
    Ok(1usize << (order - 1))
}

/// Inserts a zero at position `owner` of the packed index bits.
#[inline]
pub(crate) fn scatter(owner: usize, index: u64) -> u32 {
    let low_mask = (1u64 << owner) - 1;
    let low = index & low_mask;
    let high = (index >> owner) << (owner + 1);
    (low | high) as u32
}

/// Removes position `owner` from a column mask.
#[inline]
pub(crate) fn gather(owner: usize, mask: u32) -> u64 {
    let mask = mask as u64;
    let low_mask = (1u64 << owner) - 1;
    (mask & low_mask) | ((mask >> (owner + 1)) << owner)
}

/// Column addressed by index bit `slot` in rows owned by `owner`.
#[inline]
pub fn slot_column(owner: usize, slot: usize) -> usize {
    if slot < owner {
        slot
    } else {
        slot + 1
    }
}

/// One adjacency row: the incoming-edge indicator vector of `owner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowState {
    owner: NodeId,
    order: usize,
    mask: u32,
}

impl RowState {
    /// Builds a row from a 0/1 vector of length `N`.
    pub fn from_bits(owner: NodeId, bits: &[u8]) -> Result<Self> {
        let order = bits.len();
        check_order(order)?;
        NodeId::checked(owner.0, order)?;
        let mut mask = 0u32;
        for (col, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => mask |= 1 << col,
                _ => {
                    return Err(Error::Domain {
                        name: "adjacency entry",
                        value: b as f64,
                        constraint: "must be 0 or 1",
                    })
                }
            }
        }
        Self::from_mask(owner, order, mask)
    }

    /// Builds a row from a column bitmask (bit `c` set means edge from `c`).
    pub fn from_mask(owner: NodeId, order: usize, mask: u32) -> Result<Self> {
        check_order(order)?;
        NodeId::checked(owner.0, order)?;
        if order < 32 && mask >> order != 0 {
            return Err(Error::Dimension {
                context: "row mask width",
                expected: order,
                actual: 32 - mask.leading_zeros() as usize,
            });
        }
        if mask & (1 << owner.0) != 0 {
            return Err(Error::SelfLoop { owner: owner.0 });
        }
        Ok(RowState { owner, order, mask })
    }

    pub fn empty(owner: NodeId, order: usize) -> Result<Self> {
        Self::from_mask(owner, order, 0)
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    #[inline]
    pub fn bit(&self, col: usize) -> bool {
        col < self.order && self.mask & (1 << col) != 0
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.order).map(|c| self.bit(c) as u8).collect()
    }

    pub fn count_ones(&self) -> u32 {
        self.mask.count_ones()
    }
}

/// The `index`-th element of `A^node` for a graph of `order` nodes.
pub fn index_to_state(node: NodeId, index: RowStateIndex, order: usize) -> Result<RowState> {
    let size = state_space_size(order)? as u64;
    NodeId::checked(node.0, order)?;
    if index.0 >= size {
        return Err(Error::IndexOutOfRange {
            index: index.0,
            bound: size,
        });
    }
    Ok(RowState {
        owner: node,
        order,
        mask: scatter(node.0, index.0),
    })
}

/// Inverse of [`index_to_state`].
pub fn state_to_index(state: &RowState) -> Result<RowStateIndex> {
    if state.mask & (1 << state.owner.0) != 0 {
        return Err(Error::SelfLoop {
            owner: state.owner.0,
        });
    }
    Ok(RowStateIndex(gather(state.owner.0, state.mask)))
}

/// Range-checked Hamming distance between two states of an order-`N` graph.
pub fn hamming(i: RowStateIndex, j: RowStateIndex, order: usize) -> Result<u32> {
    let size = state_space_size(order)? as u64;
    for idx in [i, j] {
        if idx.0 >= size {
            return Err(Error::IndexOutOfRange {
                index: idx.0,
                bound: size,
            });
        }
    }
    Ok(i.hamming(j))
}

/// A full `N × N` binary adjacency matrix with zero diagonal.
///
/// `A[n][m] = 1` encodes the directed edge `m → n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphSnapshot {
    order: usize,
    rows: Vec<u32>,
}

impl GraphSnapshot {
    pub fn empty(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(GraphSnapshot {
            order,
            rows: alloc::vec![0; order],
        })
    }

    /// Every off-diagonal entry set.
    pub fn complete(order: usize) -> Result<Self> {
        check_order(order)?;
        let full = ((1u64 << order) - 1) as u32;
        let rows = (0..order).map(|n| full & !(1 << n)).collect();
        Ok(GraphSnapshot { order, rows })
    }

    /// Builds from one column mask per row.
    pub fn from_masks(masks: Vec<u32>) -> Result<Self> {
        let order = masks.len();
        check_order(order)?;
        for (n, &m) in masks.iter().enumerate() {
            RowState::from_mask(NodeId(n), order, m)?;
        }
        Ok(GraphSnapshot { order, rows: masks })
    }

    pub fn from_rows(rows: &[RowState]) -> Result<Self> {
        let order = rows.len();
        check_order(order)?;
        let mut masks = Vec::with_capacity(order);
        for (n, r) in rows.iter().enumerate() {
            if r.owner.0 != n {
                return Err(Error::Dimension {
                    context: "row owner",
                    expected: n,
                    actual: r.owner.0,
                });
            }
            if r.order != order {
                return Err(Error::Dimension {
                    context: "row length",
                    expected: order,
                    actual: r.order,
                });
            }
            masks.push(r.mask);
        }
        Ok(GraphSnapshot { order, rows: masks })
    }

    /// Builds from a dense 0/1 matrix given row by row.
    pub fn from_dense<R: AsRef<[u8]>>(matrix: &[R]) -> Result<Self> {
        let order = matrix.len();
        check_order(order)?;
        let mut masks = Vec::with_capacity(order);
        for (n, row) in matrix.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != order {
                return Err(Error::Dimension {
                    context: "dense matrix row",
                    expected: order,
                    actual: row.len(),
                });
            }
            masks.push(RowState::from_bits(NodeId(n), row)?.mask);
        }
        Ok(GraphSnapshot { order, rows: masks })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn row(&self, node: NodeId) -> RowState {
        RowState {
            owner: node,
            order: self.order,
            mask: self.rows[node.0],
        }
    }

    pub fn row_mask(&self, node: NodeId) -> u32 {
        self.rows[node.0]
    }

    pub fn row_index(&self, node: NodeId) -> RowStateIndex {
        RowStateIndex(gather(node.0, self.rows[node.0]))
    }

    pub(crate) fn set_row_mask(&mut self, node: NodeId, mask: u32) {
        debug_assert_eq!(mask & (1 << node.0), 0);
        self.rows[node.0] = mask;
    }

    /// Sets row `node` to the state with the given index.
    pub fn set_row_index(&mut self, node: NodeId, index: RowStateIndex) -> Result<()> {
        let row = index_to_state(node, index, self.order)?;
        self.rows[node.0] = row.mask;
        Ok(())
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row] & (1 << col) != 0
    }

    /// Sets `A[row][col]`; the diagonal cannot be set.
    pub fn set(&mut self, row: usize, col: usize, value: bool) -> Result<()> {
        NodeId::checked(row, self.order)?;
        NodeId::checked(col, self.order)?;
        if row == col {
            if value {
                return Err(Error::SelfLoop { owner: row });
            }
            return Ok(());
        }
        if value {
            self.rows[row] |= 1 << col;
        } else {
            self.rows[row] &= !(1 << col);
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// Directed edges `(src, dst)` in row-major order of `A`, i.e. sorted by
    /// `dst` then `src`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(dst, &mask)| {
            (0..self.order)
                .filter(move |&src| mask & (1 << src) != 0)
                .map(move |src| (src, dst))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.order)
            .map(|n| self.row(NodeId(n)).bits())
            .collect()
    }
}
