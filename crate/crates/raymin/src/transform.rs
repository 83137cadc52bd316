//! Order-preserving int-to-float conversion and the floating-point
//! validity gate for block configurations.

use crate::error::{Error, Result};

const MANTISSA_BITS: i64 = 1 << 23;

/// Order-preserving transform of a nonnegative integer into a 32-bit
/// float: `E = floor(x / 2^23)`, `M = x mod 2^23`, result
/// `(M + 2^23) / 2^24 * 2^E`.
///
/// The intermediate runs in `f64`, where it is exact, and is rounded
/// once into `f32`. Strictly increasing over the domain `[0, 2^31)`;
/// the result stays finite in `f32` for inputs below `129 * 2^23`.
pub fn int_to_float(x: i64) -> Result<f32> {
    if !(0..1 << 31).contains(&x) {
        return Err(Error::TransformDomain { value: x });
    }
    let e = (x >> 23) as i32;
    let m = x & (MANTISSA_BITS - 1);
    let q = (m + MANTISSA_BITS) as f64 / (2 * MANTISSA_BITS) as f64;
    Ok((q * 2f64.powi(e)) as f32)
}

/// Block matrix shape derived from `(n, block_size)`.
///
/// `grid_side` is the number of cells per row of the square layout,
/// sized so that all `num_blocks` element cells plus the reserved
/// block-minimums cell 0 fit: `G = ceil(sqrt(B + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockConfig {
    pub n: usize,
    pub block_size: usize,
    pub num_blocks: usize,
    pub grid_side: usize,
}

pub const MAX_BLOCK_SIZE: usize = 1 << 18;
pub const MAX_NUM_BLOCKS: usize = 1 << 24;
/// Single-layout limit: beyond this, index spacing 1/n falls under the
/// f32 resolution of the normalized coordinates.
pub const MAX_SINGLE_N: usize = 1 << 24;

impl BlockConfig {
    /// Validates the precision gate and the hard limits, then derives
    /// the block counts and grid side.
    pub fn new(n: usize, block_size: usize) -> Result<Self> {
        if n == 0 || block_size == 0 {
            return Err(Error::Config(format!(
                "n and block_size must be positive (n={n}, block_size={block_size})"
            )));
        }
        if !precision_gate(n, block_size) {
            let (lhs, rhs) = gate_sides(n, block_size);
            return Err(Error::PrecisionGate {
                n,
                block_size,
                lhs,
                rhs,
            });
        }
        let num_blocks = n.div_ceil(block_size);
        let grid_side = ceil_sqrt(num_blocks + 1);
        Ok(BlockConfig {
            n,
            block_size,
            num_blocks,
            grid_side,
        })
    }

    /// Grid cell of a block: block `b` occupies slot `b + 1`; slot 0 is
    /// reserved for the block-minimums geometry.
    #[inline]
    pub fn cell_of_block(&self, block: usize) -> (usize, usize) {
        let slot = block + 1;
        (slot % self.grid_side, slot / self.grid_side)
    }

    #[inline]
    pub fn block_of_index(&self, i: usize) -> usize {
        i / self.block_size
    }

    /// Global index of the last element of `block`, clamped to `n - 1`
    /// for the partial tail block.
    #[inline]
    pub fn block_end(&self, block: usize) -> usize {
        (((block + 1) * self.block_size) - 1).min(self.n - 1)
    }

    #[inline]
    pub fn block_begin(&self, block: usize) -> usize {
        block * self.block_size
    }
}

/// Smallest integer `k` with `k*k >= v`.
fn ceil_sqrt(v: usize) -> usize {
    let mut k = (v as f64).sqrt().ceil() as usize;
    while k * k < v {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) >= v {
        k -= 1;
    }
    k
}

/// Smallest integer `k` with `k*k*bs >= n`, i.e. `ceil(sqrt(n / bs))`
/// with real division, evaluated exactly in integers.
fn ceil_sqrt_ratio(n: usize, bs: usize) -> u64 {
    let (n, bs) = (n as u128, bs as u128);
    let mut k = ((n as f64) / (bs as f64)).sqrt().ceil() as u128;
    while k * k * bs < n {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) * bs >= n {
        k -= 1;
    }
    k as u64
}

/// Floating-point validity gate for a block configuration:
///
/// `2^floor(log2(2 * ceil(sqrt(n / bs)))) * 2^-23 <= 1 / bs`
///
/// plus the hard limits `bs <= 2^18` and `ceil(n / bs) <= 2^24`. The
/// left side is the unit-in-last-place at the farthest in-range grid
/// coordinate, the right side the local lattice spacing; when it holds,
/// adjacent normalized query coordinates stay distinct in `f32`.
pub fn precision_gate(n: usize, block_size: usize) -> bool {
    if n == 0 || block_size == 0 {
        return false;
    }
    if block_size > MAX_BLOCK_SIZE || n.div_ceil(block_size) > MAX_NUM_BLOCKS {
        return false;
    }
    let k = ceil_sqrt_ratio(n, block_size);
    let e = (2 * k).ilog2();
    // 2^e * 2^-23 <= 1/bs  <=>  bs * 2^e <= 2^23, exact in integers.
    (block_size as u128) << e <= 1 << 23
}

/// The two sides of the gate inequality, for diagnostics:
/// `(2^floor(log2(2 ceil(sqrt(n/bs)))) * 2^-23, 1 / bs)`.
pub fn gate_sides(n: usize, block_size: usize) -> (f64, f64) {
    let k = ceil_sqrt_ratio(n.max(1), block_size.max(1));
    let e = (2 * k).ilog2() as i32;
    (2f64.powi(e - 23), 1.0 / block_size as f64)
}

/// Picks a block configuration for `n`.
///
/// A provided hint must pass the gate (otherwise the configuration is
/// rejected, not silently replaced). Without a hint, the largest
/// power-of-two block size `<= 2^18` that passes is chosen.
pub fn choose_block_size(n: usize, hint: Option<usize>) -> Result<BlockConfig> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(bs) = hint {
        return BlockConfig::new(n, bs);
    }
    let mut exp = MAX_BLOCK_SIZE.ilog2() as i32;
    while exp >= 0 {
        let bs = 1usize << exp;
        if precision_gate(n, bs) {
            return BlockConfig::new(n, bs);
        }
        exp -= 1;
    }
    Err(Error::NoValidBlockConfig { n })
}
