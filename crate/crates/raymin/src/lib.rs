//! Batched range minimum queries answered geometrically.
//!
//! Every array element becomes a triangle whose plane position along the
//! X axis is the element's value and whose shape in the (L, R) plane is
//! derived from its index. A query `(l, r)` becomes a ray launched from
//! `(Θ, l/n, r/n)` along +X; the closest hit is the leftmost minimum of
//! `X[l..=r]`. Traversal runs on a software bounding volume hierarchy
//! that emulates RT-core closest-hit semantics in 32-bit floats.
//!
//! Large inputs are split into blocks laid out as cells of a square grid
//! in the (L, R) plane. A query then decomposes into at most two partial
//! block rays plus one query over the per-block minimums, which live in
//! a reserved grid cell (or in an all-pairs lookup table).
//!
//! The [`oracle`] module holds exact reference solvers (left-to-right
//! scan and a sparse table) that ground-truth the geometric path, and
//! [`verify`] bundles the invariant suites behind the `raymin verify`
//! subcommand.

pub mod array;
pub mod bench;
pub mod bvh;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod math;
pub mod oracle;
pub mod transform;
pub mod verify;

pub use array::{DistTag, InputArray, Query, QueryBatch, RmqAnswer};
pub use engine::{BatchResult, Solver};
pub use error::{Error, Result};
pub use geometry::{BlockMinStrategy, Scene};
pub use transform::{choose_block_size, int_to_float, precision_gate, BlockConfig};
