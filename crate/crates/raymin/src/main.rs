use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use raymin::array::{InputArray, Query, QueryBatch, RmqAnswer};
use raymin::bench::{
    best_raycast_cells, heatmap_sweep, run_bench, write_csv, AlgoId, BenchParams, DistKind,
    HeatmapOptions, LengthSpec,
};
use raymin::engine::Solver;
use raymin::error::{Error, Result};
use raymin::geometry::{dump_triangles, gen_triangle_block_paper_literal, BlockMinStrategy, Layout};
use raymin::math::Real;
use raymin::oracle::{rmq_exhaustive, SparseTable};
use raymin::transform::BlockConfig;
use raymin::verify::{run_all, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "raymin",
    version,
    about = "Range minimum queries answered by ray casts on a software BVH"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BlockMinArg {
    Geometry,
    Lookup,
}

impl From<BlockMinArg> for BlockMinStrategy {
    fn from(v: BlockMinArg) -> Self {
        match v {
            BlockMinArg::Geometry => BlockMinStrategy::Geometry,
            BlockMinArg::Lookup => BlockMinStrategy::LookupTable,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suites of all modules at desk scale.
    Verify {
        /// Worker threads (default: all cores).
        #[arg(long, env = "RMQ_THREADS")]
        threads: Option<usize>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Additionally run the 32/64-bit agreement suite.
        #[arg(long)]
        fp64: bool,
    },
    /// Answer queries from a file (array values then `l r` lines).
    Query {
        /// Input file: optional `int` header, one value per line, then
        /// one `l r` pair per line.
        #[arg(long)]
        input: PathBuf,
        /// Answers file, `index value` per line (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// raycast, sparse or exhaustive.
        #[arg(long, default_value = "raycast")]
        algo: String,
        /// Block size for the raycast block-matrix layout (must pass the
        /// precision gate). Without it the layout is single.
        #[arg(long)]
        block_size: Option<usize>,
        /// Number of blocks; alternative to --block-size.
        #[arg(long)]
        nb: Option<usize>,
        #[arg(long, value_enum, default_value_t = BlockMinArg::Geometry)]
        blockmin: BlockMinArg,
        #[arg(long, env = "RMQ_THREADS")]
        threads: Option<usize>,
        /// Solve with 64-bit geometry (debug cross-check mode).
        #[arg(long)]
        fp64: bool,
        /// Also verify answers via theta + t reconstruction.
        #[arg(long)]
        check_reconstruction: bool,
        /// Write the built scene, one `id v0 v1 v2` triangle per line.
        #[arg(long)]
        dump_scene: Option<PathBuf>,
        /// Dump the literal block formulas (normalization and cell
        /// coordinates by block count) instead of the square grid.
        /// Affects --dump-scene only.
        #[arg(long)]
        strict_paper_layout: bool,
    },
    /// Time one benchmark cell and emit a CSV row.
    Bench {
        #[arg(long, default_value = "raycast")]
        algo: String,
        #[arg(long)]
        n: usize,
        /// Batch size (queries per pass).
        #[arg(long)]
        q: usize,
        /// large, medium or small.
        #[arg(long, default_value = "large")]
        dist: String,
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        nb: Option<usize>,
        #[arg(long, value_enum, default_value_t = BlockMinArg::Geometry)]
        blockmin: BlockMinArg,
        #[arg(long, default_value_t = 8)]
        reps: usize,
        #[arg(long, default_value_t = 4)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "RMQ_THREADS")]
        threads: Option<usize>,
        /// CSV file (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep the n x |(l,r)| grid and write a CSV.
    Heatmap {
        /// Comma-separated algorithm list.
        #[arg(long, default_value = "raycast,sparse,exhaustive")]
        algos: String,
        /// Smallest array-size exponent (n = 2^nmin).
        #[arg(long, default_value_t = 10)]
        nmin: u32,
        #[arg(long, default_value_t = 20)]
        nmax: u32,
        /// Most negative range-length exponent (|(l,r)| = n * 2^y).
        #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
        ymin: i32,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        ymax: i32,
        #[arg(long, default_value_t = 4096)]
        q: usize,
        #[arg(long, default_value_t = 2)]
        reps: usize,
        #[arg(long, default_value_t = 2)]
        realizations: usize,
        /// Comma-separated raycast block-size candidates.
        #[arg(long)]
        block_sizes: Option<String>,
        #[arg(long, value_enum, default_value_t = BlockMinArg::Geometry)]
        blockmin: BlockMinArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "RMQ_THREADS")]
        threads: Option<usize>,
        /// CSV file (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve_threads(opt: Option<usize>) -> usize {
    opt.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify {
            threads,
            seed,
            fp64,
        } => cmd_verify(resolve_threads(threads), seed, fp64),
        Command::Query {
            input,
            output,
            algo,
            block_size,
            nb,
            blockmin,
            threads,
            fp64,
            check_reconstruction,
            dump_scene,
            strict_paper_layout,
        } => cmd_query(QueryArgs {
            input,
            output,
            algo,
            block_size,
            nb,
            blockmin: blockmin.into(),
            threads: resolve_threads(threads),
            fp64,
            check_reconstruction,
            dump_scene,
            strict_paper_layout,
        }),
        Command::Bench {
            algo,
            n,
            q,
            dist,
            block_size,
            nb,
            blockmin,
            reps,
            realizations,
            seed,
            threads,
            output,
        } => {
            let algo = AlgoId::parse(&algo)?;
            let kind = DistKind::parse(&dist)?;
            let block_size = resolve_block_size(n, block_size, nb)?;
            let params = BenchParams {
                algo,
                n,
                batch: q,
                lengths: LengthSpec::Dist(kind),
                dist_label: kind.as_str().to_string(),
                reps,
                realizations,
                seed,
                threads: resolve_threads(threads),
                block_size,
                blockmin: blockmin.into(),
            };
            let outcome = run_bench(&params)?;
            eprintln!(
                "build: {:.3} ms total, ns/RMQ stddev over realizations: {:.3}",
                outcome.build_ms, outcome.stddev_ns_per_rmq
            );
            write_records(output.as_deref(), &[outcome.record])?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Heatmap {
            algos,
            nmin,
            nmax,
            ymin,
            ymax,
            q,
            reps,
            realizations,
            block_sizes,
            blockmin,
            seed,
            threads,
            output,
        } => {
            if nmin > nmax || ymin > ymax {
                return Err(Error::Config(
                    "need nmin <= nmax and ymin <= ymax".into(),
                ));
            }
            if ymax > -1 {
                return Err(Error::Config("range exponents must be negative".into()));
            }
            let algos = algos
                .split(',')
                .map(AlgoId::parse)
                .collect::<Result<Vec<_>>>()?;
            let mut opts = HeatmapOptions::desk_defaults();
            opts.n_exps = (nmin..=nmax).collect();
            opts.y_exps = (ymin..=ymax).collect();
            opts.algos = algos;
            opts.batch = q;
            opts.reps = reps;
            opts.realizations = realizations;
            opts.seed = seed;
            opts.threads = resolve_threads(threads);
            opts.blockmin = blockmin.into();
            if let Some(list) = block_sizes {
                opts.block_sizes = list
                    .split(',')
                    .map(|s| {
                        s.parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad block size '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            let records = heatmap_sweep(&opts)?;
            for best in best_raycast_cells(&records) {
                eprintln!(
                    "best raycast for n={} {}: block_size={} at {:.1} ns/RMQ",
                    best.n,
                    best.dist,
                    best.block_size
                        .map_or("single".to_string(), |b| b.to_string()),
                    best.ns_per_rmq
                );
            }
            write_records(output.as_deref(), &records)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_verify(threads: usize, seed: u64, fp64: bool) -> Result<ExitCode> {
    let opts = VerifyOptions {
        seed,
        threads,
        fp64,
    };
    let suites = run_all(&opts);
    let mut failed = false;
    for suite in &suites {
        if suite.passed() {
            println!("suite {:<16} PASS ({} checks)", suite.name, suite.checks);
        } else {
            failed = true;
            println!(
                "suite {:<16} FAIL ({} checks, {} failures)",
                suite.name,
                suite.checks,
                suite.failures.len()
            );
            for f in suite.failures.iter().take(10) {
                println!("    {f}");
            }
        }
    }
    if failed {
        Ok(ExitCode::FAILURE)
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

struct QueryArgs {
    input: PathBuf,
    output: Option<PathBuf>,
    algo: String,
    block_size: Option<usize>,
    nb: Option<usize>,
    blockmin: BlockMinStrategy,
    threads: usize,
    fp64: bool,
    check_reconstruction: bool,
    dump_scene: Option<PathBuf>,
    strict_paper_layout: bool,
}

fn resolve_block_size(
    n: usize,
    block_size: Option<usize>,
    nb: Option<usize>,
) -> Result<Option<usize>> {
    match (block_size, nb) {
        (Some(_), Some(_)) => Err(Error::Config(
            "--block-size and --nb are mutually exclusive".into(),
        )),
        (Some(bs), None) => Ok(Some(bs)),
        (None, Some(0)) => Err(Error::Config("--nb must be positive".into())),
        (None, Some(nb)) => Ok(Some(n.div_ceil(nb))),
        (None, None) => Ok(None),
    }
}

fn cmd_query(args: QueryArgs) -> Result<ExitCode> {
    let algo = AlgoId::parse(&args.algo)?;
    let (arr, queries) = parse_input_file(&args.input)?;
    if algo != AlgoId::Raycast {
        if args.block_size.is_some() || args.nb.is_some() {
            return Err(Error::Config(
                "block options apply to the raycast algorithm only".into(),
            ));
        }
        if args.fp64 || args.dump_scene.is_some() {
            return Err(Error::Config(
                "--fp64 and --dump-scene apply to the raycast algorithm only".into(),
            ));
        }
    }
    let block_size = resolve_block_size(arr.len(), args.block_size, args.nb)?;
    let cfg = block_size
        .map(|bs| BlockConfig::new(arr.len(), bs))
        .transpose()?;

    let answers: Vec<RmqAnswer> = match algo {
        AlgoId::Raycast => {
            if args.fp64 {
                raycast_answers::<f64>(&args, arr, cfg, &queries)?
            } else {
                raycast_answers::<f32>(&args, arr, cfg, &queries)?
            }
        }
        AlgoId::Sparse => {
            let table = SparseTable::new(&arr);
            queries
                .iter()
                .map(|&q| table.query(q))
                .collect::<Result<_>>()?
        }
        AlgoId::Exhaustive => queries
            .iter()
            .map(|&q| rmq_exhaustive(&arr, q))
            .collect::<Result<_>>()?,
    };

    let mut out = open_output(args.output.as_deref())?;
    for a in &answers {
        writeln!(out, "{} {}", a.index, a.value)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn raycast_answers<T: Real>(
    args: &QueryArgs,
    arr: InputArray,
    cfg: Option<BlockConfig>,
    queries: &[Query],
) -> Result<Vec<RmqAnswer>> {
    let solver = match cfg {
        Some(cfg) => Solver::<T>::block(arr, cfg, args.blockmin)?,
        None => Solver::<T>::single(arr)?,
    }
    .with_reconstruction_check(args.check_reconstruction);

    if let Some(path) = &args.dump_scene {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        if args.strict_paper_layout {
            match solver.scene().layout() {
                Layout::BlockMatrix(cfg) => {
                    let tris: Vec<_> = (0..solver.array().len())
                        .map(|i| gen_triangle_block_paper_literal::<T>(solver.array(), i, &cfg))
                        .collect();
                    dump_triangles(&tris, &mut w)?;
                }
                Layout::Single => {
                    eprintln!("note: --strict-paper-layout only differs for block scenes");
                    solver.scene().dump(&mut w)?;
                }
            }
        } else {
            solver.scene().dump(&mut w)?;
        }
        w.flush()?;
    }

    if queries.is_empty() {
        return Ok(Vec::new());
    }
    let batch = QueryBatch::explicit(queries.to_vec());
    Ok(solver.solve_batch(&batch, args.threads)?.answers)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_records(path: Option<&Path>, records: &[raymin::bench::BenchRecord]) -> Result<()> {
    let mut out = open_output(path)?;
    write_csv(&mut out, records)?;
    out.flush()?;
    Ok(())
}

/// Input format: optional `int` header, then one array value per line,
/// then one `l r` query per line. Blank lines are skipped.
fn parse_input_file(path: &Path) -> Result<(InputArray, Vec<Query>)> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut int_mode = false;
    let mut saw_content = false;
    let mut floats: Vec<f32> = Vec::new();
    let mut ints: Vec<i64> = Vec::new();
    let mut queries: Vec<(Query, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if !saw_content && line == "int" {
            int_mode = true;
            saw_content = true;
            continue;
        }
        saw_content = true;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |msg: String| Error::Parse {
            path: display.clone(),
            line: lineno,
            msg,
        };
        match fields.len() {
            1 => {
                if !queries.is_empty() {
                    return Err(parse("array value after the first query".into()));
                }
                if int_mode {
                    ints.push(
                        fields[0]
                            .parse::<i64>()
                            .map_err(|e| parse(format!("bad integer '{}': {e}", fields[0])))?,
                    );
                } else {
                    floats.push(
                        fields[0]
                            .parse::<f32>()
                            .map_err(|e| parse(format!("bad value '{}': {e}", fields[0])))?,
                    );
                }
            }
            2 => {
                let l = fields[0]
                    .parse::<u32>()
                    .map_err(|e| parse(format!("bad index '{}': {e}", fields[0])))?;
                let r = fields[1]
                    .parse::<u32>()
                    .map_err(|e| parse(format!("bad index '{}': {e}", fields[1])))?;
                queries.push((Query::new(l, r), lineno));
            }
            k => return Err(parse(format!("expected 1 or 2 fields, found {k}"))),
        }
    }

    let arr = if int_mode {
        InputArray::from_ints(ints)?
    } else {
        InputArray::from_f32(floats)?
    };
    for (q, lineno) in &queries {
        arr.validate_query(*q).map_err(|e| Error::Parse {
            path: display.clone(),
            line: *lineno,
            msg: e.to_string(),
        })?;
    }
    Ok((arr, queries.into_iter().map(|(q, _)| q).collect()))
}
