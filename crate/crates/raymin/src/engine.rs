//! The solver: ray generation, block-query decomposition, answer
//! recovery and batch execution on top of a built [`Scene`].

use std::time::Instant;

use rayon::prelude::*;

use crate::array::{InputArray, Query, QueryBatch, RmqAnswer};
use crate::bvh::{Hit, Ray};
use crate::error::{Error, Result};
use crate::geometry::{lattice, BlockMinStrategy, Layout, Scene};
use crate::math::{ulp_at_f32, Real, Vec3};
use crate::transform::{choose_block_size, BlockConfig};

/// Immutable RMQ solver. `T = f32` is the production mode emulating
/// RT-core precision; `T = f64` exists for agreement cross-checks.
#[derive(Debug, Clone)]
pub struct Solver<T: Real = f32> {
    arr: InputArray,
    scene: Scene<T>,
    check_reconstruction: bool,
    block_boundary_bug: bool,
}

/// Sub-answers of a block-matrix query, exposed for the decomposition
/// identity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockDecomposition {
    /// The query fit inside one block: a single ray answered it.
    SingleBlock(RmqAnswer),
    /// Left/right partial-block rays plus the fully-covered middle
    /// blocks; `middle` is `None` when no block is fully covered (the
    /// max-sentinel case).
    Split {
        left: RmqAnswer,
        right: RmqAnswer,
        middle: Option<RmqAnswer>,
    },
}

impl<T: Real> Solver<T> {
    /// Single-layout solver (one normalized space, `n <= 2^24`).
    pub fn single(arr: InputArray) -> Result<Self> {
        let scene = Scene::single(&arr)?;
        Ok(Solver {
            arr,
            scene,
            check_reconstruction: false,
            block_boundary_bug: false,
        })
    }

    /// Block-matrix solver with an explicit, gate-checked configuration.
    pub fn block(arr: InputArray, cfg: BlockConfig, strategy: BlockMinStrategy) -> Result<Self> {
        let scene = Scene::block_matrix(&arr, cfg, strategy)?;
        Ok(Solver {
            arr,
            scene,
            check_reconstruction: false,
            block_boundary_bug: false,
        })
    }

    /// Block-matrix solver; the hint must pass the precision gate,
    /// otherwise the largest valid power-of-two block size is chosen.
    pub fn block_auto(
        arr: InputArray,
        hint: Option<usize>,
        strategy: BlockMinStrategy,
    ) -> Result<Self> {
        let cfg = choose_block_size(arr.len(), hint)?;
        Self::block(arr, cfg, strategy)
    }

    /// When enabled, every hit also reconstructs the value as `Θ + t`
    /// and fails with [`Error::Reconstruction`] if it differs from the
    /// stored value by more than 1 ulp at the hit-plane scale.
    pub fn with_reconstruction_check(mut self, on: bool) -> Self {
        self.check_reconstruction = on;
        self
    }

    /// Test hook: shifts the right partial block's start by one, which
    /// corrupts the decomposition. Exists so the verification suite can
    /// prove it detects exactly this class of bug.
    #[doc(hidden)]
    pub fn debug_inject_block_boundary_bug(&mut self, on: bool) {
        self.block_boundary_bug = on;
    }

    #[inline]
    pub fn array(&self) -> &InputArray {
        &self.arr
    }

    #[inline]
    pub fn scene(&self) -> &Scene<T> {
        &self.scene
    }

    /// Answers one query; equals the exact oracles on every input.
    pub fn solve(&self, q: Query) -> Result<RmqAnswer> {
        self.arr.validate_query(q)?;
        match self.scene.layout() {
            Layout::Single => self.solve_single(q),
            Layout::BlockMatrix(cfg) => self.solve_block(q, &cfg),
        }
    }

    fn solve_single(&self, q: Query) -> Result<RmqAnswer> {
        let n = self.arr.len();
        let hit = self.cast(
            lattice(q.l as i64, n, 0),
            lattice(q.r as i64, n, 0),
            q,
        )?;
        self.element_answer(hit, q)
    }

    fn solve_block(&self, q: Query, cfg: &BlockConfig) -> Result<RmqAnswer> {
        Ok(match self.block_decomposition_impl(q, cfg)? {
            BlockDecomposition::SingleBlock(ans) => ans,
            BlockDecomposition::Split {
                left,
                right,
                middle,
            } => {
                // min of the sub-answers; ties to the smaller index keep
                // the leftmost-minimum contract across block boundaries.
                let mut best = left;
                for cand in [Some(right), middle].into_iter().flatten() {
                    if cand.value < best.value
                        || (cand.value == best.value && cand.index < best.index)
                    {
                        best = cand;
                    }
                }
                best
            }
        })
    }

    /// The raw decomposition of a block-layout query, for structural
    /// checks. `solve` is `min` over these parts.
    #[doc(hidden)]
    pub fn block_decomposition(&self, q: Query) -> Result<BlockDecomposition> {
        self.arr.validate_query(q)?;
        match self.scene.layout() {
            Layout::Single => Err(Error::Config(
                "decomposition requires a block-matrix solver".into(),
            )),
            Layout::BlockMatrix(cfg) => self.block_decomposition_impl(q, &cfg),
        }
    }

    fn block_decomposition_impl(&self, q: Query, cfg: &BlockConfig) -> Result<BlockDecomposition> {
        let bs = cfg.block_size;
        let (l, r) = (q.l as usize, q.r as usize);
        let (b_l, b_r) = (l / bs, r / bs);
        if b_l == b_r {
            let begin = cfg.block_begin(b_l);
            let ans = self.cast_block_cell(cfg, b_l, l - begin, r - begin, q)?;
            return Ok(BlockDecomposition::SingleBlock(ans));
        }
        // left partial block: [l, end of b_l]
        let left = self.cast_block_cell(
            cfg,
            b_l,
            l - cfg.block_begin(b_l),
            cfg.block_end(b_l) - cfg.block_begin(b_l),
            q,
        )?;
        // right partial block: [begin of b_r, r]
        let r_local = r - cfg.block_begin(b_r);
        let begin_local = if self.block_boundary_bug && r_local >= 1 {
            1
        } else {
            0
        };
        let right = self.cast_block_cell(cfg, b_r, begin_local, r_local, q)?;
        // fully covered middle blocks
        let middle = if b_r - b_l > 1 {
            Some(self.blockmin_range(cfg, b_l + 1, b_r - 1, q)?)
        } else {
            None
        };
        Ok(BlockDecomposition::Split {
            left,
            right,
            middle,
        })
    }

    fn cast_block_cell(
        &self,
        cfg: &BlockConfig,
        block: usize,
        l_local: usize,
        r_local: usize,
        q: Query,
    ) -> Result<RmqAnswer> {
        let (bx, by) = cfg.cell_of_block(block);
        let hit = self.cast(
            lattice(l_local as i64, cfg.block_size, bx),
            lattice(r_local as i64, cfg.block_size, by),
            q,
        )?;
        self.element_answer(hit, q)
    }

    /// Block-level answer over fully covered blocks `[jl, jr]`, through
    /// the cell-0 geometry or the lookup table, mapped back to a global
    /// index via the stored block argmins.
    fn blockmin_range(&self, cfg: &BlockConfig, jl: usize, jr: usize, q: Query) -> Result<RmqAnswer> {
        let mins = self
            .scene
            .block_minimums()
            .ok_or_else(|| Error::Internal("block scene without minimums".into()))?;
        let block = match self.scene.blockmin_strategy() {
            Some(BlockMinStrategy::Geometry) => {
                let hit = self.cast(
                    lattice(jl as i64, cfg.num_blocks, 0),
                    lattice(jr as i64, cfg.num_blocks, 0),
                    q,
                )?;
                if self.check_reconstruction {
                    self.check_rec(hit.t, mins.values[hit.primitive_id as usize], q)?;
                }
                hit.primitive_id as usize
            }
            Some(BlockMinStrategy::LookupTable) => {
                self.scene
                    .lookup()
                    .ok_or_else(|| Error::Internal("lookup strategy without table".into()))?
                    .get(jl, jr) as usize
            }
            None => return Err(Error::Internal("block scene without strategy".into())),
        };
        let index = mins.argmin[block];
        Ok(RmqAnswer {
            index,
            value: self.arr.values()[index as usize],
        })
    }

    fn cast(&self, y: T, z: T, q: Query) -> Result<Hit<T>> {
        let ray = Ray::axis_x(Vec3::new(self.scene.theta(), y, z));
        self.scene
            .bvh()
            .closest_hit(self.scene.triangles(), &ray)
            .ok_or(Error::NoHit { l: q.l, r: q.r })
    }

    fn element_answer(&self, hit: Hit<T>, q: Query) -> Result<RmqAnswer> {
        let index = hit.primitive_id;
        let value = self.arr.values()[index as usize];
        if self.check_reconstruction {
            self.check_rec(hit.t, value, q)?;
        }
        Ok(RmqAnswer { index, value })
    }

    fn check_rec(&self, t: T, value: f32, q: Query) -> Result<()> {
        let rec = (self.scene.theta() + t).to_f64() as f32;
        let scale = rec.abs().max(value.abs()).max(t.to_f64() as f32);
        if (rec - value).abs() > ulp_at_f32(scale) {
            let ulps = crate::math::ulp_distance_f32(rec, value);
            return Err(Error::Reconstruction {
                l: q.l,
                r: q.r,
                ulps,
            });
        }
        Ok(())
    }

    /// Answers a whole batch, preserving input order regardless of the
    /// worker count. Only the query loop is timed; building the scene is
    /// preprocessing and excluded.
    pub fn solve_batch(&self, batch: &QueryBatch, threads: usize) -> Result<BatchResult> {
        if batch.queries.is_empty() {
            return Err(Error::Config("batch must contain at least one query".into()));
        }
        for &q in &batch.queries {
            self.arr.validate_query(q)?;
        }
        let start = Instant::now();
        let results: Vec<Result<RmqAnswer>> = if threads <= 1 {
            batch.queries.iter().map(|&q| self.solve(q)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| batch.queries.par_iter().map(|&q| self.solve(q)).collect())
        };
        let elapsed_ns = start.elapsed().as_nanos();
        let mut answers = Vec::with_capacity(results.len());
        for r in results {
            answers.push(r?); // first per-query error in input order
        }
        Ok(BatchResult {
            ns_per_rmq: elapsed_ns as f64 / answers.len() as f64,
            answers,
            elapsed_ns,
        })
    }
}

/// Result of a batch run: answers in input order plus wall time around
/// the query loop.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub answers: Vec<RmqAnswer>,
    pub elapsed_ns: u128,
    pub ns_per_rmq: f64,
}
