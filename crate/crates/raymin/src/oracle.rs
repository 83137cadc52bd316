//! Exact reference solvers.
//!
//! These ground-truth the geometric engine: the left-to-right scan is
//! the primitive oracle, the sparse table is the fast one used by the
//! large equivalence sweeps. Ties always resolve to the smallest index.

use crate::array::{InputArray, Query, RmqAnswer};
use crate::error::Result;

/// Leftmost argmin by scanning `[l, r]` from left to right.
pub fn rmq_exhaustive(arr: &InputArray, q: Query) -> Result<RmqAnswer> {
    arr.validate_query(q)?;
    let values = arr.values();
    let mut best = q.l;
    for i in (q.l + 1)..=q.r {
        if values[i as usize] < values[best as usize] {
            best = i;
        }
    }
    Ok(RmqAnswer {
        index: best,
        value: values[best as usize],
    })
}

/// O(n log n) space, O(1) query sparse table over argmin indices.
///
/// Every merge prefers the smaller index on equal values, so answers
/// match [`rmq_exhaustive`] exactly, duplicates included.
#[derive(Debug, Clone)]
pub struct SparseTable {
    values: Vec<f32>,
    // levels[k][j] = leftmost argmin of values[j .. j + 2^k]
    levels: Vec<Vec<u32>>,
}

pub fn build_sparse_table(arr: &InputArray) -> SparseTable {
    SparseTable::new(arr)
}

impl SparseTable {
    pub fn new(arr: &InputArray) -> Self {
        let values = arr.values().to_vec();
        let n = values.len();
        let log = if n == 1 { 0 } else { n.ilog2() as usize };
        let mut levels = Vec::with_capacity(log + 1);
        levels.push((0..n as u32).collect::<Vec<u32>>());
        for k in 1..=log {
            let half = 1usize << (k - 1);
            let prev = &levels[k - 1];
            let mut cur = Vec::with_capacity(n - (1 << k) + 1);
            for j in 0..=(n - (1 << k)) {
                let a = prev[j];
                let b = prev[j + half];
                cur.push(pick(&values, a, b));
            }
            levels.push(cur);
        }
        SparseTable { values, levels }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Leftmost argmin over `[l, r]`, equal to the exhaustive scan.
    pub fn query(&self, q: Query) -> Result<RmqAnswer> {
        if q.l > q.r || (q.r as usize) >= self.values.len() {
            return Err(crate::error::Error::InvalidQuery {
                l: q.l,
                r: q.r,
                n: self.values.len(),
            });
        }
        let len = (q.r - q.l + 1) as usize;
        let k = len.ilog2() as usize;
        let a = self.levels[k][q.l as usize];
        let b = self.levels[k][(q.r as usize + 1) - (1 << k)];
        let index = pick(&self.values, a, b);
        Ok(RmqAnswer {
            index,
            value: self.values[index as usize],
        })
    }
}

#[inline]
fn pick(values: &[f32], a: u32, b: u32) -> u32 {
    // Strictly-less keeps the leftmost index on ties; the two window
    // argmins are not ordered, so compare indices explicitly on equality.
    let (va, vb) = (values[a as usize], values[b as usize]);
    if va < vb || (va == vb && a < b) {
        a
    } else {
        b
    }
}
