//! Invariant suites behind `raymin verify`: desk-scale sweeps of every
//! module's stated properties, reporting per-suite counts.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::array::{InputArray, Query, QueryBatch};
use crate::bench::{
    gen_array, gen_queries, inject_duplicates, mix_seed, read_csv, write_csv, BenchRecord,
    DistKind, DistributionSpec,
};
use crate::bvh::{closest_hit_linear, Bvh, Ray};
use crate::engine::{BlockDecomposition, Solver};
use crate::geometry::{
    build_scene, gen_triangle, gen_triangle_block, lattice, BlockMinStrategy, Layout, Scene,
    Triangle,
};
use crate::math::Vec3;
use crate::oracle::{rmq_exhaustive, SparseTable};
use crate::transform::{choose_block_size, int_to_float, precision_gate, BlockConfig};

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Suite {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, label: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(label());
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name,
            checks: self.checks,
            failures: self.failures,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub threads: usize,
    /// Additionally run the 32/64-bit agreement suite.
    pub fp64: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0x5eed,
            threads: 1,
            fp64: false,
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteResult> {
    let mut out = vec![
        oracle_suite(opts),
        transform_suite(opts),
        geometry_suite(opts),
        bvh_suite(opts),
        engine_suite(opts),
        bench_suite(opts),
    ];
    if opts.fp64 {
        out.push(fp64_suite(opts));
    }
    out
}

fn random_values(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<f32> {
    let mut values = gen_array(n, rng.random());
    inject_duplicates(&mut values, 0.1, rng.random());
    values
}

fn oracle_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("oracle");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(opts.seed, 1));
    for _ in 0..60 {
        let n = rng.random_range(1..=128usize);
        let arr = InputArray::from_f32(random_values(&mut rng, n)).unwrap();
        let table = SparseTable::new(&arr);
        for l in 0..n as u32 {
            for r in l..n as u32 {
                let q = Query::new(l, r);
                let a = rmq_exhaustive(&arr, q).unwrap();
                let b = table.query(q).unwrap();
                s.check(a == b, || format!("sparse != exhaustive at n={n} ({l},{r})"));
                s.check(a.index >= l && a.index <= r, || {
                    format!("answer index out of range at n={n} ({l},{r})")
                });
            }
        }
        // widening a range never increases the minimum value
        for _ in 0..50 {
            let l = rng.random_range(0..n) as u32;
            let r = rng.random_range(l as usize..n) as u32;
            let inner = table.query(Query::new(l, r)).unwrap();
            let outer = table.query(Query::new(0, (n - 1) as u32)).unwrap();
            s.check(outer.value <= inner.value, || {
                format!("monotonicity violated at n={n} ({l},{r})")
            });
        }
    }
    s.finish()
}

fn transform_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("transform");
    s.check(int_to_float(0).unwrap() == 0.5, || "transform(0) != 0.5".into());
    s.check(int_to_float(1 << 23).unwrap() == 1.0, || {
        "transform(2^23) != 1.0".into()
    });
    s.check(int_to_float((1 << 24) - 1).unwrap() == 2.0 - f32::EPSILON, || {
        "transform(2^24-1) wrong".into()
    });
    s.check(int_to_float(-1).is_err(), || {
        "negative input accepted".into()
    });

    // exhaustive strict monotonicity on a desk-scale prefix
    let mut prev = -1.0f32;
    let mut ok = true;
    for x in 0..(1i64 << 18) {
        let v = int_to_float(x).unwrap();
        if v <= prev {
            ok = false;
            break;
        }
        prev = v;
    }
    s.check(ok, || "transform not strictly monotone on [0, 2^18]".into());

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(opts.seed, 2));
    for _ in 0..100_000 {
        let a = rng.random_range(0..(1i64 << 30));
        let b = rng.random_range(0..(1i64 << 30));
        if a == b {
            continue;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        s.checks += 1;
        if int_to_float(lo).unwrap() >= int_to_float(hi).unwrap() {
            s.failures.push(format!("monotonicity broken at {lo} < {hi}"));
            break;
        }
    }

    // gate worked examples
    s.check(precision_gate(1 << 26, 1 << 12), || "gate example 1".into());
    s.check(precision_gate(1 << 26, 1 << 18), || "gate example 2".into());
    s.check(!precision_gate(1 << 34, 1 << 18), || "gate example 3".into());
    s.check(choose_block_size(1 << 26, None).unwrap().block_size == 1 << 18, || {
        "auto block size for 2^26".into()
    });
    s.finish()
}

fn geometry_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("geometry");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(opts.seed, 3));
    for n in 1..=48usize {
        let arr = InputArray::from_f32(random_values(&mut rng, n)).unwrap();
        // single layout membership
        let tris: Vec<Triangle<f32>> = (0..n).map(|i| gen_triangle(&arr, i)).collect();
        for l in 0..n {
            for r in l..n {
                let ray = Ray::axis_x(Vec3::new(
                    arr.theta(),
                    lattice::<f32>(l as i64, n, 0),
                    lattice::<f32>(r as i64, n, 0),
                ));
                for (i, tri) in tris.iter().enumerate() {
                    let hit = crate::bvh::intersect_ray_triangle(&ray, tri).is_some();
                    s.check(hit == (l <= i && i <= r), || {
                        format!("single membership n={n} ({l},{r}) tri {i}")
                    });
                }
            }
        }
        // block layout membership for one valid config
        let bs = rng.random_range(1..=n.min(8));
        if precision_gate(n, bs) {
            let cfg = BlockConfig::new(n, bs).unwrap();
            let tris: Vec<Triangle<f32>> =
                (0..n).map(|i| gen_triangle_block(&arr, i, &cfg)).collect();
            for block in 0..cfg.num_blocks {
                let (bx, by) = cfg.cell_of_block(block);
                let count = cfg.block_end(block) - cfg.block_begin(block) + 1;
                for ll in 0..count {
                    for rr in ll..count {
                        let ray = Ray::axis_x(Vec3::new(
                            arr.theta(),
                            lattice::<f32>(ll as i64, bs, bx),
                            lattice::<f32>(rr as i64, bs, by),
                        ));
                        for (i, tri) in tris.iter().enumerate() {
                            let expect = i / bs == block && ll <= i % bs && i % bs <= rr;
                            let hit =
                                crate::bvh::intersect_ray_triangle(&ray, tri).is_some();
                            s.check(hit == expect, || {
                                format!(
                                    "block membership n={n} bs={bs} b={block} ({ll},{rr}) tri {i}"
                                )
                            });
                        }
                    }
                }
            }
        }
    }
    s.finish()
}

fn bvh_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("bvh");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(opts.seed, 4));
    for _ in 0..30 {
        let n = rng.random_range(1..=256usize);
        let arr = InputArray::from_f32(random_values(&mut rng, n)).unwrap();
        let tris: Vec<Triangle<f32>> = (0..n).map(|i| gen_triangle(&arr, i)).collect();
        let bvh = Bvh::build(&tris).unwrap();
        s.check(bvh.validate(&tris).is_ok(), || {
            format!("structural invariants broken at n={n}")
        });
        let bound = 2 * (n.max(2)).ilog2() as usize + 2;
        s.check(bvh.max_depth() <= bound, || {
            format!("depth {} over bound {bound} at n={n}", bvh.max_depth())
        });
        for _ in 0..2000 {
            let (y, z) = if rng.random::<bool>() {
                (
                    lattice::<f32>(rng.random_range(0..n) as i64, n, 0),
                    lattice::<f32>(rng.random_range(0..n) as i64, n, 0),
                )
            } else {
                (
                    rng.random::<f32>() * 3.0 - 1.5,
                    rng.random::<f32>() * 3.5 - 1.5,
                )
            };
            let ray = Ray::axis_x(Vec3::new(arr.theta(), y, z));
            let fast = bvh.closest_hit(&tris, &ray);
            let slow = closest_hit_linear(&tris, &ray);
            let same = match (fast, slow) {
                (None, None) => true,
                (Some(f), Some(g)) => {
                    f.t.to_bits() == g.t.to_bits()
                        && f.primitive_id == g.primitive_id
                        && f.triangle_index == g.triangle_index
                }
                _ => false,
            };
            s.check(same, || format!("traversal != linear scan at n={n}"));
        }
    }
    s.finish()
}

/// Structural decomposition identity over a block solver: sub-answers
/// equal the oracle over their sub-ranges and their minimum equals the
/// oracle over the full range. Returns failure descriptions.
pub fn decomposition_check(solver: &Solver<f32>, queries: &[Query]) -> Vec<String> {
    let Layout::BlockMatrix(cfg) = solver.scene().layout() else {
        return vec!["decomposition check requires a block solver".into()];
    };
    let table = SparseTable::new(solver.array());
    let mut failures = Vec::new();
    for &q in queries {
        let want = table.query(q).unwrap();
        let got = match solver.solve(q) {
            Ok(a) => a,
            Err(e) => {
                failures.push(format!("solve failed at ({},{}): {e}", q.l, q.r));
                continue;
            }
        };
        if got != want {
            failures.push(format!(
                "answer mismatch at ({},{}): got index {}, oracle {}",
                q.l, q.r, got.index, want.index
            ));
        }
        let parts = match solver.block_decomposition(q) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("decomposition failed at ({},{}): {e}", q.l, q.r));
                continue;
            }
        };
        let bs = cfg.block_size;
        let (b_l, b_r) = (q.l as usize / bs, q.r as usize / bs);
        match parts {
            BlockDecomposition::SingleBlock(_) => {
                if b_l != b_r {
                    failures.push(format!(
                        "case-1 decomposition for a multi-block query ({},{})",
                        q.l, q.r
                    ));
                }
            }
            BlockDecomposition::Split {
                left,
                right,
                middle,
            } => {
                let left_want = table
                    .query(Query::new(q.l, cfg.block_end(b_l) as u32))
                    .unwrap();
                let right_want = table
                    .query(Query::new(cfg.block_begin(b_r) as u32, q.r))
                    .unwrap();
                if left != left_want {
                    failures.push(format!(
                        "left partial wrong at ({},{}): got {}, oracle {}",
                        q.l, q.r, left.index, left_want.index
                    ));
                }
                if right != right_want {
                    failures.push(format!(
                        "right partial wrong at ({},{}): got {}, oracle {}",
                        q.l, q.r, right.index, right_want.index
                    ));
                }
                match middle {
                    None => {
                        if b_r - b_l > 1 {
                            failures.push(format!(
                                "missing middle answer at ({},{})",
                                q.l, q.r
                            ));
                        }
                    }
                    Some(m) => {
                        if b_r - b_l <= 1 {
                            failures.push(format!(
                                "unexpected middle answer at ({},{})",
                                q.l, q.r
                            ));
                        } else {
                            let m_want = table
                                .query(Query::new(
                                    cfg.block_begin(b_l + 1) as u32,
                                    cfg.block_end(b_r - 1) as u32,
                                ))
                                .unwrap();
                            if m != m_want {
                                failures.push(format!(
                                    "middle wrong at ({},{}): got {}, oracle {}",
                                    q.l, q.r, m.index, m_want.index
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    failures
}

fn engine_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("engine");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(opts.seed, 5));
    for _ in 0..8 {
        let n = rng.random_range(64..=4096usize);
        let arr = InputArray::from_f32(random_values(&mut rng, n)).unwrap();
        let table = SparseTable::new(&arr);
        let queries: Vec<Query> = (0..1500)
            .map(|_| {
                let l = rng.random_range(0..n) as u32;
                let r = rng.random_range(l as usize..n) as u32;
                Query::new(l, r)
            })
            .collect();

        let single = Solver::<f32>::single(arr.clone())
            .unwrap()
            .with_reconstruction_check(true);
        let mut block_solvers = Vec::new();
        for _ in 0..2 {
            let bs = rng.random_range(1..=n);
            if !precision_gate(n, bs) {
                continue;
            }
            let cfg = BlockConfig::new(n, bs).unwrap();
            for strategy in [BlockMinStrategy::Geometry, BlockMinStrategy::LookupTable] {
                block_solvers.push(
                    Solver::<f32>::block(arr.clone(), cfg, strategy)
                        .unwrap()
                        .with_reconstruction_check(true),
                );
            }
        }
        for &q in &queries {
            let want = table.query(q).unwrap();
            let got = single.solve(q).unwrap();
            s.check(got == want, || {
                format!("single != oracle at n={n} ({},{})", q.l, q.r)
            });
            for solver in &block_solvers {
                let got = solver.solve(q).unwrap();
                s.check(got == want, || {
                    format!(
                        "block != oracle at n={n} ({},{}) {:?}",
                        q.l,
                        q.r,
                        solver.scene().layout()
                    )
                });
            }
        }
        // structural decomposition identity on one block solver
        if let Some(solver) = block_solvers.first() {
            let failures = decomposition_check(solver, &queries[..300]);
            s.checks += 300;
            s.failures.extend(failures);
        }
        // batch answers independent of worker count
        let batch = QueryBatch::explicit(queries.clone());
        let a = single.solve_batch(&batch, 1).unwrap();
        let b = single.solve_batch(&batch, opts.threads.max(4)).unwrap();
        s.check(a.answers == b.answers, || {
            format!("batch answers depend on thread count at n={n}")
        });
    }
    s.finish()
}

fn bench_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("bench");
    // distribution anchors (lengths only, no arrays materialized)
    let large = DistributionSpec::new(DistKind::Large, 1 << 20);
    let batch = gen_queries(&large, 50_000, mix_seed(opts.seed, 6));
    let mean =
        batch.queries.iter().map(|q| q.len() as f64).sum::<f64>() / batch.queries.len() as f64;
    let target = large.analytic_mean_len();
    s.check((mean - target).abs() / target < 0.05, || {
        format!("large mean {mean:.1} vs {target:.1}")
    });
    for kind in [DistKind::Medium, DistKind::Small] {
        let spec = DistributionSpec::new(kind, 1 << 26);
        let batch = gen_queries(&spec, 50_000, mix_seed(opts.seed, 7));
        let mean = batch.queries.iter().map(|q| q.len() as f64).sum::<f64>()
            / batch.queries.len() as f64;
        let target = spec.analytic_mean_len();
        s.check((mean - target).abs() / target < 0.15, || {
            format!("{kind:?} mean {mean:.1} vs analytic {target:.1}")
        });
        s.check(batch.queries.iter().all(|q| (q.r as usize) < (1 << 26)), || {
            format!("{kind:?} produced out-of-range queries")
        });
    }
    // generator determinism
    let spec = DistributionSpec::new(DistKind::Small, 1 << 16);
    let a = gen_queries(&spec, 10_000, 1234);
    let b = gen_queries(&spec, 10_000, 1234);
    s.check(a.queries == b.queries, || "generator not deterministic".into());

    // CSV round trip
    let rec = BenchRecord {
        n: 1024,
        q: 64,
        dist: "small".into(),
        algo: "sparse".into(),
        block_size: None,
        ns_per_rmq: 12.3456789,
        total_ms: 1.5,
        reps: 2,
        realizations: 2,
        seed: opts.seed,
        status: "ok".into(),
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
    let parsed = read_csv(&buf[..]).unwrap();
    let mut buf2 = Vec::new();
    write_csv(&mut buf2, &parsed).unwrap();
    s.check(buf == buf2, || "CSV round trip not stable".into());
    s.finish()
}

fn fp64_suite(opts: &VerifyOptions) -> SuiteResult {
    let mut s = Suite::new("fp64-agreement");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(opts.seed, 8));
    for _ in 0..6 {
        let n = rng.random_range(128..=4096usize);
        let arr = InputArray::from_f32(random_values(&mut rng, n)).unwrap();
        let bs = rng.random_range(1..=n);
        let cfg = precision_gate(n, bs).then(|| BlockConfig::new(n, bs).unwrap());

        let s32: Scene<f32> = build_scene(&arr, cfg, BlockMinStrategy::Geometry).unwrap();
        let s64: Scene<f64> = build_scene(&arr, cfg, BlockMinStrategy::Geometry).unwrap();
        let f32s = match cfg {
            Some(c) => Solver::<f32>::block(arr.clone(), c, BlockMinStrategy::Geometry).unwrap(),
            None => Solver::<f32>::single(arr.clone()).unwrap(),
        };
        let f64s = match cfg {
            Some(c) => Solver::<f64>::block(arr.clone(), c, BlockMinStrategy::Geometry).unwrap(),
            None => Solver::<f64>::single(arr.clone()).unwrap(),
        };
        s.check(s32.triangles().len() == s64.triangles().len(), || {
            "triangle count differs between precisions".into()
        });
        for _ in 0..2000 {
            let l = rng.random_range(0..n) as u32;
            let r = rng.random_range(l as usize..n) as u32;
            let q = Query::new(l, r);
            let a = f32s.solve(q).unwrap();
            let b = f64s.solve(q).unwrap();
            s.check(a.index == b.index && a.value.to_bits() == b.value.to_bits(), || {
                format!("fp32/fp64 disagree at n={n} ({l},{r}): {} vs {}", a.index, b.index)
            });
        }
    }
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_at_desk_scale() {
        let opts = VerifyOptions {
            seed: 0xdead,
            threads: 2,
            fp64: true,
        };
        for suite in run_all(&opts) {
            assert!(
                suite.passed(),
                "suite {} failed: {:?}",
                suite.name,
                &suite.failures[..suite.failures.len().min(5)]
            );
            assert!(suite.checks > 0);
        }
    }

    #[test]
    fn decomposition_check_catches_injected_boundary_bug() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let n = 512usize;
        let values = random_values(&mut rng, n);
        let arr = InputArray::from_f32(values).unwrap();
        let cfg = BlockConfig::new(n, 32).unwrap();
        let mut solver =
            Solver::<f32>::block(arr, cfg, BlockMinStrategy::Geometry).unwrap();
        let queries: Vec<Query> = (0..400)
            .map(|_| {
                let l = rng.random_range(0..n) as u32;
                let r = rng.random_range(l as usize..n) as u32;
                Query::new(l, r)
            })
            .collect();
        assert!(decomposition_check(&solver, &queries).is_empty());
        solver.debug_inject_block_boundary_bug(true);
        assert!(
            !decomposition_check(&solver, &queries).is_empty(),
            "suite failed to detect the injected off-by-one"
        );
    }
}
