//! Triangle scene construction.
//!
//! Single layout: one triangle per element, placed along the value axis
//! and shaped in the (L, R) plane so a query ray at `(l/n, r/n)` passes
//! through triangle `i` exactly when `l <= i <= r`. The triangle for
//! element `i` carries a one-normalized-unit border: its legs sit at
//! `L = (i+1)/n` and `R = (i-1)/n`, so required hits land strictly
//! inside while the neighbor queries `l = i+1` / `r = i-1` land exactly
//! on a leg, which the intersection rule treats as a miss.
//!
//! Block-matrix layout: the array splits into blocks of `block_size`
//! elements; block `b` renders into grid cell `b + 1` (cell 0 holds the
//! geometry over the per-block minimums) with local coordinates
//! normalized by `block_size` and offset by twice the cell coordinate.

use std::io::Write;

use crate::array::InputArray;
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::math::{Real, Vec3};
use crate::transform::{BlockConfig, MAX_SINGLE_N};

/// One scene primitive, perpendicular to the value axis
/// (`v0.x == v1.x == v2.x`) with the right-angle corner at `v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle<T: Real> {
    pub v0: Vec3<T>,
    pub v1: Vec3<T>,
    pub v2: Vec3<T>,
    /// Source element index, or block index for block-minimum triangles.
    pub primitive_id: u32,
}

/// Normalized lattice coordinate `idx / denom + 2 * cell`, computed in
/// 64-bit and rounded once.
///
/// Triangle generation and ray generation must both go through this
/// function: on-border queries then land bitwise on triangle legs and
/// the miss/hit decision is exact rather than epsilon-dependent.
#[inline]
pub fn lattice<T: Real>(idx: i64, denom: usize, cell: usize) -> T {
    T::from_f64(idx as f64 / denom as f64 + (2 * cell) as f64)
}

/// Triangle for element `i` in the single layout.
pub fn gen_triangle<T: Real>(arr: &InputArray, i: usize) -> Triangle<T> {
    let n = arr.len();
    let x = T::from_f32(arr.values()[i]);
    let l = lattice::<T>(i as i64 + 1, n, 0);
    let r = lattice::<T>(i as i64 - 1, n, 0);
    Triangle {
        v0: Vec3::new(x, l, r),
        v1: Vec3::new(x, l, T::TWO),
        v2: Vec3::new(x, -T::ONE, r),
        primitive_id: i as u32,
    }
}

/// Triangle for element `i` in the block-matrix layout: same shape as
/// [`gen_triangle`] but normalized by the block size and offset into the
/// block's grid cell.
pub fn gen_triangle_block<T: Real>(arr: &InputArray, i: usize, cfg: &BlockConfig) -> Triangle<T> {
    let x = T::from_f32(arr.values()[i]);
    let local = (i % cfg.block_size) as i64;
    let (bx, by) = cfg.cell_of_block(i / cfg.block_size);
    let l = lattice::<T>(local + 1, cfg.block_size, bx);
    let r = lattice::<T>(local - 1, cfg.block_size, by);
    Triangle {
        v0: Vec3::new(x, l, r),
        v1: Vec3::new(x, l, T::from_f64((2 * by + 2) as f64)),
        v2: Vec3::new(x, T::from_f64(2.0 * bx as f64 - 1.0), r),
        primitive_id: i as u32,
    }
}

/// Block-minimum triangle for block `b`, placed in cell 0 and
/// normalized by the number of blocks.
fn gen_blockmin_triangle<T: Real>(value: f32, block: usize, num_blocks: usize) -> Triangle<T> {
    let x = T::from_f32(value);
    let l = lattice::<T>(block as i64 + 1, num_blocks, 0);
    let r = lattice::<T>(block as i64 - 1, num_blocks, 0);
    Triangle {
        v0: Vec3::new(x, l, r),
        v1: Vec3::new(x, l, T::TWO),
        v2: Vec3::new(x, -T::ONE, r),
        primitive_id: block as u32,
    }
}

/// Literal transcription of the block triangle formulas with every
/// normalization and cell coordinate taken modulo/divided by the block
/// count instead of the square grid side.
///
/// Kept for inspection behind the `--strict-paper-layout` dump flag:
/// with that reading the local offsets `(i_l + 1)/B` leave the unit
/// cell whenever `B != block_size`, so it is not used for solving. See
/// `paper_literal_layout_leaves_cell` below.
pub fn gen_triangle_block_paper_literal<T: Real>(
    arr: &InputArray,
    i: usize,
    cfg: &BlockConfig,
) -> Triangle<T> {
    let x = T::from_f32(arr.values()[i]);
    let b = cfg.num_blocks;
    let local = (i % cfg.block_size) as i64;
    let slot = i / cfg.block_size + 1;
    let (bx, by) = (slot % b.max(1), slot / b.max(1));
    let l = lattice::<T>(local + 1, b, bx);
    let r = lattice::<T>(local - 1, b, by);
    Triangle {
        v0: Vec3::new(x, l, r),
        v1: Vec3::new(x, l, T::from_f64((2 * by + 2) as f64)),
        v2: Vec3::new(x, T::from_f64(2.0 * bx as f64 - 1.0), r),
        primitive_id: i as u32,
    }
}

/// Per-block leftmost minima: `values[b]` is the smallest element of
/// block `b`, `argmin[b]` its global index.
#[derive(Debug, Clone)]
pub struct BlockMinimums {
    pub values: Vec<f32>,
    pub argmin: Vec<u32>,
}

pub fn compute_block_minimums(arr: &InputArray, cfg: &BlockConfig) -> BlockMinimums {
    let values = arr.values();
    let mut mins = Vec::with_capacity(cfg.num_blocks);
    let mut args = Vec::with_capacity(cfg.num_blocks);
    for b in 0..cfg.num_blocks {
        let start = cfg.block_begin(b);
        let end = cfg.block_end(b);
        let mut best = start;
        for i in start + 1..=end {
            if values[i] < values[best] {
                best = i;
            }
        }
        mins.push(values[best]);
        args.push(best as u32);
    }
    BlockMinimums {
        values: mins,
        argmin: args,
    }
}

/// All-pairs answers over the block minimums; `get(jl, jr)` is the
/// leftmost argmin block of `A'[jl..=jr]`. Memory is `num_blocks^2`.
#[derive(Debug, Clone)]
pub struct BlockLookupTable {
    side: usize,
    entries: Vec<u32>,
}

impl BlockLookupTable {
    fn new(mins: &BlockMinimums) -> Self {
        let side = mins.values.len();
        let mut entries = vec![0u32; side * side];
        for jl in 0..side {
            let mut best = jl;
            for jr in jl..side {
                if mins.values[jr] < mins.values[best] {
                    best = jr;
                }
                entries[jl * side + jr] = best as u32;
            }
        }
        BlockLookupTable { side, entries }
    }

    #[inline]
    pub fn get(&self, jl: usize, jr: usize) -> u32 {
        debug_assert!(jl <= jr && jr < self.side);
        self.entries[jl * self.side + jr]
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }
}

/// How the fully-covered middle blocks of a decomposed query are
/// answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockMinStrategy {
    /// Extra triangles over the block minimums in grid cell 0.
    Geometry,
    /// Precomputed all-pairs matrix.
    LookupTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Single,
    BlockMatrix(BlockConfig),
}

/// Immutable triangle scene plus its acceleration structure.
#[derive(Debug, Clone)]
pub struct Scene<T: Real> {
    triangles: Vec<Triangle<T>>,
    element_count: usize,
    layout: Layout,
    blockmin_strategy: Option<BlockMinStrategy>,
    block_minimums: Option<BlockMinimums>,
    lookup: Option<BlockLookupTable>,
    bvh: Bvh<T>,
    theta: T,
}

/// Builds a scene: single layout when `cfg` is `None` (requires
/// `n <= 2^24`), otherwise the block-matrix layout with the given
/// strategy for the block minimums. Configurations are gate-checked at
/// [`BlockConfig`] construction, before any geometry exists.
pub fn build_scene<T: Real>(
    arr: &InputArray,
    cfg: Option<BlockConfig>,
    strategy: BlockMinStrategy,
) -> Result<Scene<T>> {
    match cfg {
        None => Scene::single(arr),
        Some(cfg) => Scene::block_matrix(arr, cfg, strategy),
    }
}

impl<T: Real> Scene<T> {
    pub fn single(arr: &InputArray) -> Result<Self> {
        let n = arr.len();
        if n > MAX_SINGLE_N {
            return Err(Error::SingleLayoutLimit { n });
        }
        let triangles: Vec<Triangle<T>> = (0..n).map(|i| gen_triangle(arr, i)).collect();
        let bvh = Bvh::build(&triangles)?;
        Ok(Scene {
            triangles,
            element_count: n,
            layout: Layout::Single,
            blockmin_strategy: None,
            block_minimums: None,
            lookup: None,
            bvh,
            theta: T::from_f32(arr.theta()),
        })
    }

    pub fn block_matrix(
        arr: &InputArray,
        cfg: BlockConfig,
        strategy: BlockMinStrategy,
    ) -> Result<Self> {
        if cfg.n != arr.len() {
            return Err(Error::Config(format!(
                "block configuration is for n={}, array has n={}",
                cfg.n,
                arr.len()
            )));
        }
        let mins = compute_block_minimums(arr, &cfg);
        let mut triangles: Vec<Triangle<T>> = (0..arr.len())
            .map(|i| gen_triangle_block(arr, i, &cfg))
            .collect();
        let lookup = match strategy {
            BlockMinStrategy::Geometry => {
                for (b, &v) in mins.values.iter().enumerate() {
                    triangles.push(gen_blockmin_triangle(v, b, cfg.num_blocks));
                }
                None
            }
            BlockMinStrategy::LookupTable => Some(BlockLookupTable::new(&mins)),
        };
        let bvh = Bvh::build(&triangles)?;
        Ok(Scene {
            triangles,
            element_count: arr.len(),
            layout: Layout::BlockMatrix(cfg),
            blockmin_strategy: Some(strategy),
            block_minimums: Some(mins),
            lookup,
            bvh,
            theta: T::from_f32(arr.theta()),
        })
    }

    #[inline]
    pub fn triangles(&self) -> &[Triangle<T>] {
        &self.triangles
    }

    #[inline]
    pub fn bvh(&self) -> &Bvh<T> {
        &self.bvh
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn theta(&self) -> T {
        self.theta
    }

    #[inline]
    pub fn element_count(&self) -> usize {
        self.element_count
    }

    #[inline]
    pub fn blockmin_strategy(&self) -> Option<BlockMinStrategy> {
        self.blockmin_strategy
    }

    #[inline]
    pub fn block_minimums(&self) -> Option<&BlockMinimums> {
        self.block_minimums.as_ref()
    }

    #[inline]
    pub fn lookup(&self) -> Option<&BlockLookupTable> {
        self.lookup.as_ref()
    }

    /// Writes `id v0x v0y v0z v1x v1y v1z v2x v2y v2z` per triangle.
    pub fn dump(&self, w: &mut dyn Write) -> Result<()> {
        dump_triangles(&self.triangles, w)
    }
}

pub fn dump_triangles<T: Real>(triangles: &[Triangle<T>], w: &mut dyn Write) -> Result<()> {
    for t in triangles {
        writeln!(
            w,
            "{} {} {} {} {} {} {} {} {} {}",
            t.primitive_id,
            t.v0.x,
            t.v0.y,
            t.v0.z,
            t.v1.x,
            t.v1.y,
            t.v1.z,
            t.v2.x,
            t.v2.y,
            t.v2.z
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::{intersect_ray_triangle, Ray};
    use crate::transform::precision_gate;

    fn arr(values: &[f32]) -> InputArray {
        InputArray::from_f32(values.to_vec()).unwrap()
    }

    #[test]
    fn single_triangle_example() {
        // X = [5,3,1,9,6,2], i = 2 (value 1).
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let t = gen_triangle::<f32>(&a, 2);
        let sixth = (1.0f64 / 6.0) as f32;
        assert_eq!(t.v0, Vec3::new(1.0, 0.5, sixth));
        assert_eq!(t.v1, Vec3::new(1.0, 0.5, 2.0));
        assert_eq!(t.v2, Vec3::new(1.0, -1.0, sixth));
        assert_eq!(t.primitive_id, 2);
    }

    #[test]
    fn single_triangle_n1() {
        let a = arr(&[7.0]);
        let t = gen_triangle::<f32>(&a, 0);
        assert_eq!(t.v0, Vec3::new(7.0, 1.0, -1.0));
        assert_eq!(t.v1, Vec3::new(7.0, 1.0, 2.0));
        assert_eq!(t.v2, Vec3::new(7.0, -1.0, -1.0));
    }

    #[test]
    fn block_triangle_examples() {
        // n=8, block_size=4 => 2 blocks, grid side 2.
        let a = arr(&[1.0; 8]);
        let cfg = BlockConfig::new(8, 4).unwrap();
        assert_eq!(cfg.grid_side, 2);

        // i=5: block 1 -> slot 2 -> cell (0,1); local 1.
        let t = gen_triangle_block::<f32>(&a, 5, &cfg);
        assert_eq!(t.v0, Vec3::new(1.0, 0.5, 2.0));
        assert_eq!(t.v1, Vec3::new(1.0, 0.5, 4.0));
        assert_eq!(t.v2, Vec3::new(1.0, -1.0, 2.0));

        // i=0: block 0 -> slot 1 -> cell (1,0); local 0.
        let t = gen_triangle_block::<f32>(&a, 0, &cfg);
        assert_eq!(t.v0, Vec3::new(1.0, 2.25, -0.25));
        assert_eq!(t.v1, Vec3::new(1.0, 2.25, 2.0));
        assert_eq!(t.v2, Vec3::new(1.0, 1.0, -0.25));
    }

    /// Brute-force membership: ray (l/n, r/n) intersects triangle i iff
    /// l <= i <= r, for the single layout.
    #[test]
    fn membership_single_layout() {
        for n in 1..=64usize {
            let values: Vec<f32> = (0..n).map(|i| ((i * 37) % n) as f32).collect();
            let a = arr(&values);
            let tris: Vec<Triangle<f32>> = (0..n).map(|i| gen_triangle(&a, i)).collect();
            for l in 0..n {
                for r in l..n {
                    let origin = Vec3::new(
                        a.theta(),
                        lattice::<f32>(l as i64, n, 0),
                        lattice::<f32>(r as i64, n, 0),
                    );
                    let ray = Ray::axis_x(origin);
                    for (i, tri) in tris.iter().enumerate() {
                        let hit = intersect_ray_triangle(&ray, tri).is_some();
                        assert_eq!(
                            hit,
                            l <= i && i <= r,
                            "n={n} query=({l},{r}) triangle={i}"
                        );
                    }
                }
            }
        }
    }

    /// Same sweep for the block layout, rays aimed per block cell; also
    /// proves no cross-cell capture since every triangle is tested
    /// against every ray.
    #[test]
    fn membership_block_layout() {
        for n in 1..=64usize {
            let values: Vec<f32> = (0..n).map(|i| ((i * 29) % n) as f32).collect();
            let a = arr(&values);
            for bs in [1usize, 2, 3, 4, 7, 16] {
                if bs > n || !precision_gate(n, bs) {
                    continue;
                }
                let cfg = BlockConfig::new(n, bs).unwrap();
                let tris: Vec<Triangle<f32>> =
                    (0..n).map(|i| gen_triangle_block(&a, i, &cfg)).collect();
                // in-block queries: local (l, r) within one block cell
                for block in 0..cfg.num_blocks {
                    let (bx, by) = cfg.cell_of_block(block);
                    let count = cfg.block_end(block) - cfg.block_begin(block) + 1;
                    for ll in 0..count {
                        for rr in ll..count {
                            let origin = Vec3::new(
                                a.theta(),
                                lattice::<f32>(ll as i64, bs, bx),
                                lattice::<f32>(rr as i64, bs, by),
                            );
                            let ray = Ray::axis_x(origin);
                            for (i, tri) in tris.iter().enumerate() {
                                let in_range = i / bs == block
                                    && ll <= i % bs
                                    && i % bs <= rr;
                                assert_eq!(
                                    intersect_ray_triangle(&ray, tri).is_some(),
                                    in_range,
                                    "n={n} bs={bs} block={block} local=({ll},{rr}) tri={i}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn block_minimums_examples() {
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let cfg = BlockConfig::new(6, 3).unwrap();
        let mins = compute_block_minimums(&a, &cfg);
        assert_eq!(mins.values, vec![1.0, 2.0]);
        assert_eq!(mins.argmin, vec![2, 5]);

        // block size >= n: one block holding the global minimum
        let cfg = BlockConfig::new(6, 8).unwrap();
        let mins = compute_block_minimums(&a, &cfg);
        assert_eq!(mins.values, vec![1.0]);
        assert_eq!(mins.argmin, vec![2]);

        let single = arr(&[7.0]);
        let cfg = BlockConfig::new(1, 4).unwrap();
        let mins = compute_block_minimums(&single, &cfg);
        assert_eq!((mins.values[0], mins.argmin[0]), (7.0, 0));
    }

    #[test]
    fn scene_triangle_counts() {
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let scene: Scene<f32> = build_scene(&a, None, BlockMinStrategy::Geometry).unwrap();
        assert_eq!(scene.triangles().len(), 6);

        let a8 = arr(&[8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        let cfg = BlockConfig::new(8, 4).unwrap();
        let scene: Scene<f32> =
            build_scene(&a8, Some(cfg), BlockMinStrategy::Geometry).unwrap();
        assert_eq!(scene.triangles().len(), 8 + 2);
        assert!(scene.lookup().is_none());

        let scene: Scene<f32> =
            build_scene(&a8, Some(cfg), BlockMinStrategy::LookupTable).unwrap();
        assert_eq!(scene.triangles().len(), 8);
        assert_eq!(scene.lookup().unwrap().num_entries(), 4);
    }

    #[test]
    fn lookup_table_is_leftmost() {
        let mins = BlockMinimums {
            values: vec![3.0, 1.0, 1.0, 2.0],
            argmin: vec![0, 4, 8, 12],
        };
        let t = BlockLookupTable::new(&mins);
        assert_eq!(t.get(0, 3), 1);
        assert_eq!(t.get(1, 2), 1);
        assert_eq!(t.get(2, 3), 2);
        assert_eq!(t.get(3, 3), 3);
    }

    #[test]
    fn query_cells_are_disjoint() {
        // The query sub-space of a cell is [2c_x, 2c_x+1) x [2c_y, 2c_y+1);
        // distinct cells (block minimums in cell 0 included) must not share
        // a cell coordinate, which makes those boxes disjoint.
        for (n, bs) in [(64usize, 4usize), (60, 7), (17, 3), (9, 3)] {
            let cfg = BlockConfig::new(n, bs).unwrap();
            let mut cells = vec![(0usize, 0usize)]; // cell 0, block minimums
            for b in 0..cfg.num_blocks {
                cells.push(cfg.cell_of_block(b));
            }
            for i in 0..cells.len() {
                for j in 0..i {
                    assert_ne!(cells[i], cells[j], "n={n} bs={bs}: cells collide");
                }
                assert!(cells[i].0 < cfg.grid_side && cells[i].1 < cfg.grid_side);
            }
        }
    }

    #[test]
    fn paper_literal_layout_leaves_cell() {
        // With B = 2 blocks of 4 elements, the literal normalization
        // (i_l + 1)/B produces local offsets up to 2.0, outside the unit
        // cell; the adopted layout divides by the block size instead.
        let a = arr(&[8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        let cfg = BlockConfig::new(8, 4).unwrap();
        let literal = gen_triangle_block_paper_literal::<f32>(&a, 3, &cfg); // i_l = 3
        let adopted = gen_triangle_block::<f32>(&a, 3, &cfg);
        let (bx, _) = cfg.cell_of_block(0);
        let local_literal = literal.v0.y - 2.0 * bx as f32;
        let local_adopted = adopted.v0.y - 2.0 * bx as f32;
        assert!(local_literal > 1.0 + 1e-6, "literal stays in cell?");
        assert!(local_adopted <= 1.0);
    }

    #[test]
    fn dump_round_trips_vertex_values() {
        let a = arr(&[5.0, 3.0, 1.0]);
        let scene: Scene<f32> = Scene::single(&a).unwrap();
        let mut buf = Vec::new();
        scene.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let fields: Vec<&str> = lines[1].split(' ').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(fields[0], "1");
        let v0y: f32 = fields[2].parse().unwrap();
        assert_eq!(v0y, scene.triangles()[1].v0.y);
    }
}
