//! Query-distribution generators, the timing harness and the heatmap
//! sweep over the `n x |(l,r)|` grid.
//!
//! All randomness flows through a seeded Xoshiro256++ (SplitMix64
//! expanded), so identical seeds give identical batches on every
//! platform and thread count.

use std::io::{BufRead, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, LogNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::array::{DistTag, InputArray, Query, QueryBatch, RmqAnswer};
use crate::engine::Solver;
use crate::error::{Error, Result};
use crate::geometry::BlockMinStrategy;
use crate::oracle::{rmq_exhaustive, SparseTable};
use crate::transform::BlockConfig;

pub const LOG_NORMAL_SIGMA: f64 = 0.3;
/// Heatmap sweeps stay below this size by default.
pub const DESK_MAX_N: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistKind {
    /// Uniform range length in `[1, n]`; mean ~ n/2.
    Large,
    /// Log-normal length, mu = ln(n^0.6), sigma = 0.3.
    Medium,
    /// Log-normal length, mu = ln(n^0.3), sigma = 0.3.
    Small,
}

impl DistKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistKind::Large => "large",
            DistKind::Medium => "medium",
            DistKind::Small => "small",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "large" => Ok(DistKind::Large),
            "medium" => Ok(DistKind::Medium),
            "small" => Ok(DistKind::Small),
            other => Err(Error::Config(format!("unknown distribution '{other}'"))),
        }
    }

    fn tag(&self) -> DistTag {
        match self {
            DistKind::Large => DistTag::Large,
            DistKind::Medium => DistTag::Medium,
            DistKind::Small => DistTag::Small,
        }
    }
}

/// Range-length distribution for arrays of size `n`.
#[derive(Debug, Clone, Copy)]
pub struct DistributionSpec {
    pub kind: DistKind,
    pub n: usize,
}

impl DistributionSpec {
    pub fn new(kind: DistKind, n: usize) -> Self {
        DistributionSpec { kind, n }
    }

    /// Natural-log mu of the log-normal kinds; `None` for the uniform one.
    pub fn mu(&self) -> Option<f64> {
        match self.kind {
            DistKind::Large => None,
            DistKind::Medium => Some(0.6 * (self.n as f64).ln()),
            DistKind::Small => Some(0.3 * (self.n as f64).ln()),
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        self.mu().map(|_| LOG_NORMAL_SIGMA)
    }

    /// Analytic mean of the generated range length: n/2 for the uniform
    /// kind, exp(mu + sigma^2/2) for the log-normal kinds.
    pub fn analytic_mean_len(&self) -> f64 {
        match self.mu() {
            None => self.n as f64 / 2.0,
            Some(mu) => (mu + LOG_NORMAL_SIGMA * LOG_NORMAL_SIGMA / 2.0).exp(),
        }
    }
}

/// Draws `count` queries: length per the spec (log-normal samples are
/// rounded up and clamped to `[1, n]`), position uniform given the
/// length.
pub fn gen_queries(spec: &DistributionSpec, count: usize, seed: u64) -> QueryBatch {
    assert!(count >= 1, "batch size must be at least 1");
    let n = spec.n;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let log_normal = spec
        .mu()
        .map(|mu| LogNormal::new(mu, LOG_NORMAL_SIGMA).expect("sigma > 0"));
    let mut queries = Vec::with_capacity(count);
    for _ in 0..count {
        let len = match log_normal {
            None => rng.random_range(1..=n),
            Some(ln) => {
                let s: f64 = ln.sample(&mut rng);
                s.ceil().clamp(1.0, n as f64) as usize
            }
        };
        queries.push(place(&mut rng, n, len));
    }
    QueryBatch {
        queries,
        tag: spec.kind.tag(),
        seed,
    }
}

/// Fixed-length queries (the heatmap's `|(l,r)| = n * 2^y` cells).
pub fn gen_fixed_len_queries(n: usize, len: usize, count: usize, seed: u64) -> QueryBatch {
    assert!(count >= 1, "batch size must be at least 1");
    let len = len.clamp(1, n);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let queries = (0..count).map(|_| place(&mut rng, n, len)).collect();
    QueryBatch {
        queries,
        tag: DistTag::Explicit,
        seed,
    }
}

#[inline]
fn place(rng: &mut Xoshiro256PlusPlus, n: usize, len: usize) -> Query {
    let l = rng.random_range(0..=(n - len));
    Query::new(l as u32, (l + len - 1) as u32)
}

/// Uniform `[0, 1)` array, the benchmark input distribution.
pub fn gen_array(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f32>()).collect()
}

/// Overwrites about `rate` of the positions with values copied from
/// other positions, forcing duplicates (tie-break coverage).
pub fn inject_duplicates(values: &mut [f32], rate: f64, seed: u64) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = values.len();
    if n < 2 {
        return;
    }
    let count = ((n as f64) * rate).round() as usize;
    for _ in 0..count {
        let dst = rng.random_range(0..n);
        let src = rng.random_range(0..n);
        values[dst] = values[src];
    }
}

/// Independent sub-seed for stream `k` of a run seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoId {
    Raycast,
    Exhaustive,
    Sparse,
}

impl AlgoId {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgoId::Raycast => "raycast",
            AlgoId::Exhaustive => "exhaustive",
            AlgoId::Sparse => "sparse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "raycast" => Ok(AlgoId::Raycast),
            "exhaustive" => Ok(AlgoId::Exhaustive),
            "sparse" => Ok(AlgoId::Sparse),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// How the benchmark draws range lengths.
#[derive(Debug, Clone, Copy)]
pub enum LengthSpec {
    Dist(DistKind),
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct BenchParams {
    pub algo: AlgoId,
    pub n: usize,
    pub batch: usize,
    pub lengths: LengthSpec,
    /// Value of the CSV `dist` column (e.g. "small" or "n2^-3").
    pub dist_label: String,
    pub reps: usize,
    pub realizations: usize,
    pub seed: u64,
    pub threads: usize,
    /// Raycast only: `Some` selects the block-matrix layout.
    pub block_size: Option<usize>,
    pub blockmin: BlockMinStrategy,
}

/// One CSV row. Field order matches [`CSV_HEADER`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    pub q: usize,
    pub dist: String,
    pub algo: String,
    pub block_size: Option<usize>,
    pub ns_per_rmq: f64,
    pub total_ms: f64,
    pub reps: usize,
    pub realizations: usize,
    pub seed: u64,
    pub status: String,
}

pub const CSV_HEADER: &str =
    "n,q,dist,algo,block_size,ns_per_rmq,total_ms,reps,realizations,seed,status";

/// Six significant digits, scientific.
fn fmt_sig6(x: f64) -> String {
    format!("{x:.5e}")
}

fn sanitize_status(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

impl BenchRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.q,
            self.dist,
            self.algo,
            self.block_size.map_or(String::new(), |b| b.to_string()),
            fmt_sig6(self.ns_per_rmq),
            fmt_sig6(self.total_ms),
            self.reps,
            self.realizations,
            self.seed,
            sanitize_status(&self.status),
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(Error::Config(format!(
                "expected 11 CSV fields, got {}: {line}",
                fields.len()
            )));
        }
        let parse_err = |what: &str| Error::Config(format!("bad {what} in CSV row: {line}"));
        Ok(BenchRecord {
            n: fields[0].parse().map_err(|_| parse_err("n"))?,
            q: fields[1].parse().map_err(|_| parse_err("q"))?,
            dist: fields[2].to_string(),
            algo: fields[3].to_string(),
            block_size: if fields[4].is_empty() {
                None
            } else {
                Some(fields[4].parse().map_err(|_| parse_err("block_size"))?)
            },
            ns_per_rmq: fields[5].parse().map_err(|_| parse_err("ns_per_rmq"))?,
            total_ms: fields[6].parse().map_err(|_| parse_err("total_ms"))?,
            reps: fields[7].parse().map_err(|_| parse_err("reps"))?,
            realizations: fields[8].parse().map_err(|_| parse_err("realizations"))?,
            seed: fields[9].parse().map_err(|_| parse_err("seed"))?,
            status: fields[10].to_string(),
        })
    }
}

pub fn write_csv<W: Write>(w: &mut W, records: &[BenchRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.to_csv_line())?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<BenchRecord>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Config(format!("bad CSV header: {other:?}")));
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(BenchRecord::from_csv_line(&line)?);
    }
    Ok(out)
}

/// Everything a bench run produced beyond the CSV row.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub record: BenchRecord,
    pub stddev_ns_per_rmq: f64,
    /// Preprocessing (scene/table build) time, reported separately from
    /// the query timing.
    pub build_ms: f64,
    /// FNV-1a over (index, value bits) of the last realization's
    /// answers; lets callers compare runs without keeping the answers.
    pub answers_digest: u64,
}

enum BenchSolver {
    Raycast(Box<Solver<f32>>),
    Sparse(SparseTable),
    Exhaustive(InputArray),
}

impl BenchSolver {
    fn solve(&self, q: Query) -> Result<RmqAnswer> {
        match self {
            BenchSolver::Raycast(s) => s.solve(q),
            BenchSolver::Sparse(t) => t.query(q),
            BenchSolver::Exhaustive(a) => rmq_exhaustive(a, q),
        }
    }

    fn solve_all(&self, queries: &[Query], threads: usize) -> Result<Vec<RmqAnswer>> {
        let results: Vec<Result<RmqAnswer>> = if threads <= 1 {
            queries.iter().map(|&q| self.solve(q)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| queries.par_iter().map(|&q| self.solve(q)).collect())
        };
        results.into_iter().collect()
    }
}

fn answers_digest(answers: &[RmqAnswer]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u64| {
        for i in 0..8 {
            h ^= (b >> (8 * i)) & 0xff;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    };
    for a in answers {
        eat(a.index as u64);
        eat(a.value.to_bits() as u64);
    }
    h
}

/// Runs one benchmark cell: `realizations` fresh arrays, each timed over
/// `reps` passes of the same batch. Configuration problems surface
/// before any timing; a sampled 1% of the answers is audited against the
/// exhaustive oracle afterwards.
pub fn run_bench(params: &BenchParams) -> Result<BenchOutcome> {
    if params.batch == 0 || params.reps == 0 || params.realizations == 0 {
        return Err(Error::Config(
            "batch, reps and realizations must be positive".into(),
        ));
    }
    if params.n == 0 {
        return Err(Error::EmptyInput);
    }
    if params.block_size.is_some() && params.algo != AlgoId::Raycast {
        return Err(Error::Config(
            "block_size applies to the raycast algorithm only".into(),
        ));
    }
    // Gate-check the block configuration up front, before any timing.
    let cfg = match (params.algo, params.block_size) {
        (AlgoId::Raycast, Some(bs)) => Some(BlockConfig::new(params.n, bs)?),
        _ => None,
    };

    let mut per_realization_ns: Vec<f64> = Vec::with_capacity(params.realizations);
    let mut total_ns: f64 = 0.0;
    let mut build_ms: f64 = 0.0;
    let mut digest = 0u64;

    for ri in 0..params.realizations {
        let array_seed = mix_seed(params.seed, 2 * ri as u64);
        let query_seed = mix_seed(params.seed, 2 * ri as u64 + 1);
        let arr = InputArray::from_f32(gen_array(params.n, array_seed))?;
        let batch = match params.lengths {
            LengthSpec::Dist(kind) => gen_queries(
                &DistributionSpec::new(kind, params.n),
                params.batch,
                query_seed,
            ),
            LengthSpec::Fixed(len) => {
                gen_fixed_len_queries(params.n, len, params.batch, query_seed)
            }
        };
        for &q in &batch.queries {
            arr.validate_query(q)?;
        }

        let build_start = Instant::now();
        let solver = match params.algo {
            AlgoId::Raycast => BenchSolver::Raycast(Box::new(match cfg {
                Some(cfg) => Solver::block(arr.clone(), cfg, params.blockmin)?,
                None => Solver::single(arr.clone())?,
            })),
            AlgoId::Sparse => BenchSolver::Sparse(SparseTable::new(&arr)),
            AlgoId::Exhaustive => BenchSolver::Exhaustive(arr.clone()),
        };
        build_ms += build_start.elapsed().as_secs_f64() * 1e3;

        let mut answers = Vec::new();
        let timer = Instant::now();
        for _ in 0..params.reps {
            answers = solver.solve_all(&batch.queries, params.threads)?;
        }
        let elapsed_ns = timer.elapsed().as_nanos() as f64;
        total_ns += elapsed_ns;
        per_realization_ns.push(elapsed_ns / (params.reps as f64 * params.batch as f64));

        audit(&arr, &batch.queries, &answers)?;
        digest = answers_digest(&answers);
    }

    let mean = per_realization_ns.iter().sum::<f64>() / per_realization_ns.len() as f64;
    let var = per_realization_ns
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / per_realization_ns.len() as f64;

    Ok(BenchOutcome {
        record: BenchRecord {
            n: params.n,
            q: params.batch,
            dist: params.dist_label.clone(),
            algo: params.algo.as_str().to_string(),
            block_size: params.block_size,
            ns_per_rmq: mean,
            total_ms: total_ns / 1e6,
            reps: params.reps,
            realizations: params.realizations,
            seed: params.seed,
            status: "ok".into(),
        },
        stddev_ns_per_rmq: var.sqrt(),
        build_ms,
        answers_digest: digest,
    })
}

/// Checks every ~100th answer against the exhaustive oracle.
fn audit(arr: &InputArray, queries: &[Query], answers: &[RmqAnswer]) -> Result<()> {
    debug_assert_eq!(queries.len(), answers.len());
    let mut i = 0;
    while i < queries.len() {
        let want = rmq_exhaustive(arr, queries[i])?;
        if answers[i] != want {
            return Err(Error::Internal(format!(
                "audit mismatch at query {} ({},{}): got ({},{}), oracle ({},{})",
                i,
                queries[i].l,
                queries[i].r,
                answers[i].index,
                answers[i].value,
                want.index,
                want.value
            )));
        }
        i += 100;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct HeatmapOptions {
    /// Array size exponents (n = 2^e per entry).
    pub n_exps: Vec<u32>,
    /// Negative range-length exponents (|(l,r)| = n * 2^y).
    pub y_exps: Vec<i32>,
    pub algos: Vec<AlgoId>,
    pub batch: usize,
    pub reps: usize,
    pub realizations: usize,
    pub seed: u64,
    pub threads: usize,
    /// Raycast block-size candidates; filtered per cell by the
    /// precision gate and `bs < n`.
    pub block_sizes: Vec<usize>,
    pub blockmin: BlockMinStrategy,
    /// Hard size cap; cells above it are rejected up front.
    pub max_n: usize,
}

impl HeatmapOptions {
    pub fn desk_defaults() -> Self {
        HeatmapOptions {
            n_exps: (10..=20).collect(),
            y_exps: (-10..=-1).collect(),
            algos: vec![AlgoId::Raycast, AlgoId::Sparse, AlgoId::Exhaustive],
            batch: 1 << 12,
            reps: 2,
            realizations: 2,
            seed: 0,
            threads: 1,
            block_sizes: vec![1 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18],
            blockmin: BlockMinStrategy::Geometry,
            max_n: DESK_MAX_N,
        }
    }
}

/// Sweeps the grid. One row per `(n, y, algo, block-size candidate)`;
/// raycast cells additionally get a single-layout row (empty block
/// size). Failures become rows with an error status and the sweep
/// continues.
pub fn heatmap_sweep(opts: &HeatmapOptions) -> Result<Vec<BenchRecord>> {
    for &e in &opts.n_exps {
        if (1usize << e) > opts.max_n {
            return Err(Error::Config(format!(
                "n = 2^{e} exceeds the sweep limit {}",
                opts.max_n
            )));
        }
    }
    let mut records = Vec::new();
    for &n_exp in &opts.n_exps {
        let n = 1usize << n_exp;
        for &y in &opts.y_exps {
            let len = ((n as f64) * 2f64.powi(y)).round().max(1.0) as usize;
            let dist_label = format!("n2^{y}");
            for &algo in &opts.algos {
                let block_candidates: Vec<Option<usize>> = match algo {
                    AlgoId::Raycast => {
                        let mut c: Vec<Option<usize>> = vec![None];
                        c.extend(
                            opts.block_sizes
                                .iter()
                                .filter(|&&bs| bs < n && crate::transform::precision_gate(n, bs))
                                .map(|&bs| Some(bs)),
                        );
                        c
                    }
                    _ => vec![None],
                };
                for block_size in block_candidates {
                    let params = BenchParams {
                        algo,
                        n,
                        batch: opts.batch,
                        lengths: LengthSpec::Fixed(len),
                        dist_label: dist_label.clone(),
                        reps: opts.reps,
                        realizations: opts.realizations,
                        seed: opts.seed,
                        threads: opts.threads,
                        block_size,
                        blockmin: opts.blockmin,
                    };
                    match run_bench(&params) {
                        Ok(outcome) => records.push(outcome.record),
                        Err(e) => records.push(BenchRecord {
                            n,
                            q: opts.batch,
                            dist: dist_label.clone(),
                            algo: algo.as_str().to_string(),
                            block_size,
                            ns_per_rmq: 0.0,
                            total_ms: 0.0,
                            reps: opts.reps,
                            realizations: opts.realizations,
                            seed: opts.seed,
                            status: sanitize_status(&format!("error: {e}")),
                        }),
                    }
                }
            }
        }
    }
    Ok(records)
}

/// Best raycast row per `(n, dist)` cell: minimal measured ns/RMQ over
/// the block-size candidates (the 2D projection of the 3D sweep).
pub fn best_raycast_cells(records: &[BenchRecord]) -> Vec<BenchRecord> {
    let mut best: Vec<BenchRecord> = Vec::new();
    for r in records {
        if r.algo != "raycast" || r.status != "ok" {
            continue;
        }
        match best
            .iter_mut()
            .find(|b| b.n == r.n && b.dist == r.dist)
        {
            None => best.push(r.clone()),
            Some(b) => {
                if r.ns_per_rmq < b.ns_per_rmq {
                    *b = r.clone();
                }
            }
        }
    }
    best
}
