//! End-to-end tests of the `raymin` binary: file formats, exit codes,
//! and output determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use raymin::bench::read_csv;
use raymin::transform::int_to_float;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_raymin")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("raymin-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const STATEMENT_FILE: &str = "9\n2\n7\n8\n4\n1\n3\n2 6\n0 0\n3 3\n";

#[test]
fn query_statement_example() {
    let dir = tmpdir("stmt");
    let input = dir.join("in.txt");
    std::fs::write(&input, STATEMENT_FILE).unwrap();
    let out = run(&["query", "--input", input.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // leftmost minimum of [2,6] is 1 at position 5; single-index ranges
    // return the element itself
    assert_eq!(text, "5 1\n0 9\n3 8\n");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn query_int_header_uses_the_transform() {
    let dir = tmpdir("int");
    let input = dir.join("in.txt");
    std::fs::write(&input, format!("int\n{STATEMENT_FILE}")).unwrap();
    let out = run(&["query", "--input", input.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().next().unwrap();
    let expect = format!("5 {}", int_to_float(1).unwrap());
    assert_eq!(first, expect);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn query_agrees_with_the_sparse_oracle_run() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(0xc1e);
    let n = 300usize;
    let mut text = String::new();
    for _ in 0..n {
        text.push_str(&format!("{}\n", rng.random::<f32>()));
    }
    for _ in 0..100 {
        let l = rng.random_range(0..n);
        let r = rng.random_range(l..n);
        text.push_str(&format!("{l} {r}\n"));
    }
    let dir = tmpdir("oracle");
    let input = dir.join("in.txt");
    std::fs::write(&input, text).unwrap();
    let ray_out = dir.join("ray.txt");
    let sparse_out = dir.join("sparse.txt");
    assert!(run(&[
        "query",
        "--input",
        input.to_str().unwrap(),
        "--output",
        ray_out.to_str().unwrap(),
        "--algo",
        "raycast",
        "--block-size",
        "32",
    ])
    .status
    .success());
    assert!(run(&[
        "query",
        "--input",
        input.to_str().unwrap(),
        "--output",
        sparse_out.to_str().unwrap(),
        "--algo",
        "sparse",
    ])
    .status
    .success());
    assert_eq!(
        std::fs::read(&ray_out).unwrap(),
        std::fs::read(&sparse_out).unwrap(),
        "raycast and sparse oracle output files differ"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_line_exits_2_with_line_number() {
    let dir = tmpdir("badline");
    let input = dir.join("in.txt");
    std::fs::write(&input, "1.0\n2.0\nnot-a-number\n0 1\n").unwrap();
    let out = run(&["query", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:"), "missing line number: {err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_query_exits_2_with_line_number() {
    let dir = tmpdir("badquery");
    let input = dir.join("in.txt");
    std::fs::write(&input, "1.0\n2.0\n1 5\n").unwrap();
    let out = run(&["query", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:"), "missing line number: {err}");
    assert!(err.contains("invalid"), "unexpected message: {err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn gate_failure_exits_2_and_prints_the_sides() {
    let out = run(&[
        "bench", "--algo", "raycast", "--n", "67108864", "--q", "4", "--dist", "small",
        "--block-size", "1048576", "--reps", "1", "--realizations", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("lhs=") && err.contains("rhs="), "sides not printed: {err}");
    std::fs::remove_dir_all(std::env::temp_dir().join("nonexistent")).ok();
}

#[test]
fn block_options_rejected_for_non_raycast() {
    let dir = tmpdir("mix");
    let input = dir.join("in.txt");
    std::fs::write(&input, "1.0\n2.0\n0 1\n").unwrap();
    let out = run(&[
        "query",
        "--input",
        input.to_str().unwrap(),
        "--algo",
        "sparse",
        "--block-size",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_named_invocation_emits_one_ok_row() {
    // Scaled-down variant of the documented call; one row, status ok.
    let out = run(&[
        "bench", "--algo", "raycast", "--n", "65536", "--q", "4096", "--dist", "small",
        "--seed", "7", "--reps", "2", "--realizations", "2",
    ]);
    assert!(out.status.success());
    let rows = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].status, "ok");
    assert_eq!(rows[0].n, 65536);
    assert_eq!(rows[0].seed, 7);
    assert!(rows[0].ns_per_rmq > 0.0);
}

#[test]
fn heatmap_grid_has_expected_rows_and_reloads() {
    let dir = tmpdir("heatmap");
    let csv_path = dir.join("grid.csv");
    let out = run(&[
        "heatmap",
        "--algos",
        "sparse,exhaustive",
        "--nmin",
        "10",
        "--nmax",
        "12",
        "--ymin",
        "-3",
        "--ymax",
        "-1",
        "--q",
        "64",
        "--reps",
        "1",
        "--realizations",
        "1",
        "--output",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let file = std::fs::File::open(&csv_path).unwrap();
    let rows = read_csv(std::io::BufReader::new(file)).unwrap();
    // 3 sizes x 3 exponents x 2 algos
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r.status == "ok"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dump_scene_writes_one_line_per_triangle() {
    let dir = tmpdir("dump");
    let input = dir.join("in.txt");
    std::fs::write(&input, "5\n3\n1\n9\n6\n2\n0 5\n").unwrap();
    let dump = dir.join("scene.txt");
    let strict = dir.join("scene-strict.txt");
    assert!(run(&[
        "query",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.join("a.txt").to_str().unwrap(),
        "--block-size",
        "3",
        "--dump-scene",
        dump.to_str().unwrap(),
    ])
    .status
    .success());
    // 6 element triangles + 2 block-minimum triangles
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.split(' ').count() == 10));

    assert!(run(&[
        "query",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.join("b.txt").to_str().unwrap(),
        "--block-size",
        "3",
        "--dump-scene",
        strict.to_str().unwrap(),
        "--strict-paper-layout",
    ])
    .status
    .success());
    let strict_text = std::fs::read_to_string(&strict).unwrap();
    assert_ne!(text, strict_text, "strict layout should differ");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fp64_mode_matches_fp32_answers() {
    let dir = tmpdir("fp64");
    let input = dir.join("in.txt");
    let mut text = String::new();
    for i in 0..200 {
        text.push_str(&format!("{}\n", ((i * 131) % 997) as f32 / 997.0));
    }
    for l in (0..190).step_by(7) {
        text.push_str(&format!("{} {}\n", l, l + 9));
    }
    std::fs::write(&input, text).unwrap();
    let a = dir.join("a.txt");
    let b = dir.join("b.txt");
    for (flag, path) in [(false, &a), (true, &b)] {
        let mut args = vec![
            "query",
            "--input",
            input.to_str().unwrap(),
            "--output",
            path.to_str().unwrap(),
            "--block-size",
            "16",
            "--check-reconstruction",
        ];
        if flag {
            args.push("--fp64");
        }
        assert!(run(&args).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_command_passes() {
    let out = run(&["verify", "--seed", "11", "--threads", "2", "--fp64"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        out.status.success(),
        "verify failed:\n{text}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(text.contains("suite oracle"));
    assert!(text.contains("suite fp64-agreement"));
    assert!(!text.contains("FAIL"));
}
