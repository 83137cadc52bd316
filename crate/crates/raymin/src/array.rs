//! Core domain types: the input sequence, queries and answers.

use crate::error::{Error, Result};
use crate::transform::int_to_float;

/// The element sequence plus its value-transform metadata.
///
/// `values` are the 32-bit reals the geometry is built from. When the
/// input was integral, `raw` keeps the originals and `values[i]` is
/// `int_to_float(raw[i])`. `theta` is the ray-origin abscissa and is
/// strictly below every value.
#[derive(Debug, Clone)]
pub struct InputArray {
    values: Vec<f32>,
    raw: Option<Vec<i64>>,
    theta: f32,
    min_value: f32,
    max_value: f32,
}

impl InputArray {
    /// Builds directly from real values (no transform). Values must be
    /// finite and there must be at least one.
    pub fn from_f32(values: Vec<f32>) -> Result<Self> {
        Self::build(values, None)
    }

    /// Builds from signed integers through the order-preserving
    /// int-to-float transform.
    pub fn from_ints(raw: Vec<i64>) -> Result<Self> {
        let values = raw
            .iter()
            .map(|&x| int_to_float(x))
            .collect::<Result<Vec<f32>>>()?;
        Self::build(values, Some(raw))
    }

    fn build(values: Vec<f32>, raw: Option<Vec<i64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut min_value = f32::INFINITY;
        let mut max_value = f32::NEG_INFINITY;
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index });
            }
            min_value = min_value.min(v);
            max_value = max_value.max(v);
        }
        // theta = min - 1; for very large magnitudes that subtraction can
        // round back to min, so fall back to the next value below.
        let mut theta = min_value - 1.0;
        if theta >= min_value {
            theta = next_down(min_value);
        }
        if !theta.is_finite() || theta >= min_value {
            return Err(Error::Config(format!(
                "cannot place a ray origin below the minimum value {min_value:e}"
            )));
        }
        Ok(InputArray {
            values,
            raw,
            theta,
            min_value,
            max_value,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction rejects empty inputs
    }

    #[inline]
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn raw(&self) -> Option<&[i64]> {
        self.raw.as_deref()
    }

    #[inline]
    pub fn theta(&self) -> f32 {
        self.theta
    }

    #[inline]
    pub fn min_value(&self) -> f32 {
        self.min_value
    }

    #[inline]
    pub fn max_value(&self) -> f32 {
        self.max_value
    }

    /// Checks `0 <= l <= r <= n-1`.
    pub fn validate_query(&self, q: Query) -> Result<()> {
        if q.l > q.r || (q.r as usize) >= self.len() {
            return Err(Error::InvalidQuery {
                l: q.l,
                r: q.r,
                n: self.len(),
            });
        }
        Ok(())
    }
}

fn next_down(x: f32) -> f32 {
    // f32::next_down is stable but spelled out here to bound behavior:
    // callers only pass finite values.
    if x.is_nan() || x == f32::NEG_INFINITY {
        return x;
    }
    let bits = x.to_bits();
    if x == 0.0 {
        return -f32::from_bits(1);
    }
    if bits >> 31 == 0 {
        f32::from_bits(bits - 1)
    } else {
        f32::from_bits(bits + 1)
    }
}

/// An inclusive index pair `l <= r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Query {
    pub l: u32,
    pub r: u32,
}

impl Query {
    #[inline]
    pub fn new(l: u32, r: u32) -> Self {
        Query { l, r }
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.r - self.l) as usize + 1
    }
}

/// Which generator produced a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistTag {
    Large,
    Medium,
    Small,
    Explicit,
}

impl DistTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistTag::Large => "large",
            DistTag::Medium => "medium",
            DistTag::Small => "small",
            DistTag::Explicit => "explicit",
        }
    }
}

/// A sequence of queries with generation provenance.
#[derive(Debug, Clone)]
pub struct QueryBatch {
    pub queries: Vec<Query>,
    pub tag: DistTag,
    pub seed: u64,
}

impl QueryBatch {
    pub fn explicit(queries: Vec<Query>) -> Self {
        QueryBatch {
            queries,
            tag: DistTag::Explicit,
            seed: 0,
        }
    }
}

/// Position and value of the leftmost minimum in a queried range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmqAnswer {
    pub index: u32,
    pub value: f32,
}
