use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn dnaphash() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dnaphash"));
    cmd.env_remove("DNAPHASH_WORKERS");
    cmd
}

fn run(args: &[&str]) -> Output {
    dnaphash().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = dnaphash()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Deterministic pseudo-random bases, good enough for distinct references.
fn bases(seed: u64, len: usize) -> String {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    (0..len)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            b"ACGT"[(x >> 62) as usize] as char
        })
        .collect()
}

fn write_refs(path: &Path, n: usize, len: usize) {
    let text: String = (0..n)
        .map(|i| format!(">ref{i:03}\n{}\n", bases(i as u64 + 1, len)))
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn constant_sequence_hashes_to_dc_bit_only() {
    let out = run_stdin(
        &["hash", "--width", "4", "--strategy", "block"],
        &format!(">s1\n{}\n", "A".repeat(16)),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "s1\t8\n");
}

#[test]
fn records_are_reported_in_file_order() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = dir.path().join("two.fa");
    fs::write(
        &fasta,
        format!(">zeta\n{}\n>alpha\n{}\n", bases(1, 100), bases(2, 100)),
    )
    .unwrap();
    let out = run(&["hash", fasta.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let ids: Vec<&str> = text
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(ids, ["zeta", "alpha"]);
}

#[test]
fn default_width_gives_sixteen_hex_digits() {
    let out = run_stdin(&["hash"], &format!(">s\n{}\n", bases(3, 256)));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out);
    let hex = line.trim_end().split('\t').nth(1).unwrap();
    assert_eq!(hex.len(), 16);
    assert!(hex.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn hashing_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = dir.path().join("refs.fa");
    write_refs(&fasta, 50, 300);
    let a = run(&["--workers", "1", "hash", fasta.to_str().unwrap()]);
    let b = run(&["--workers", "4", "hash", fasta.to_str().unwrap()]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invalid_base_is_a_data_error() {
    let out = run_stdin(&["hash"], ">bad\nACGTNACGTACGTACG\n");
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("bad") && err.contains("position 5"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn skip_record_policy_drops_ambiguous_records() {
    let out = run_stdin(
        &["hash", "--n-policy", "skip-record"],
        &format!(">bad\nACGTNACGT\n>good\n{}\n", bases(4, 64)),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("good\t"));
    assert!(stderr(&out).contains("bad"));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = run(&["hash", "/nonexistent/input.fa"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("/nonexistent/input.fa"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        code(&run(&["hash", "--width", "63", "--strategy", "block"])),
        1
    );
    assert_eq!(code(&run(&["query", "--index", "x.dph"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn indexed_sequence_finds_itself() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs.fa");
    let index = dir.path().join("refs.dph");
    write_refs(&refs, 100, 256);
    let out = run(&[
        "index",
        refs.to_str().unwrap(),
        "-o",
        index.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let query = format!(">q\n{}\n", bases(8, 256));
    let out = run_stdin(
        &[
            "query",
            "--index",
            index.to_str().unwrap(),
            "--max-dist",
            "0",
        ],
        &query,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("q\tref007\t0"));

    let out = run_stdin(
        &["query", "--index", index.to_str().unwrap(), "--top-k", "3"],
        &query,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "q\tref007\t0");
    let dists: Vec<u32> = lines
        .iter()
        .map(|l| l.rsplit('\t').next().unwrap().parse().unwrap())
        .collect();
    assert!(dists.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn windowed_index_uses_offset_ids() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("chr.fa");
    let index = dir.path().join("chr.dph");
    let genome = bases(9, 1000);
    fs::write(&refs, format!(">chr\n{genome}\n")).unwrap();
    let out = run(&[
        "index",
        refs.to_str().unwrap(),
        "-o",
        index.to_str().unwrap(),
        "--window",
        "100",
        "--step",
        "50",
        "--width",
        "32",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let query = format!(">q\n{}\n", &genome[250..350]);
    let out = run_stdin(
        &[
            "query",
            "--index",
            index.to_str().unwrap(),
            "--max-dist",
            "0",
        ],
        &query,
    );
    assert_eq!(stdout(&out).lines().next(), Some("q\tchr:250\t0"));
}

#[test]
fn corrupt_index_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs.fa");
    let index = dir.path().join("refs.dph");
    write_refs(&refs, 10, 100);
    assert_eq!(
        code(&run(&[
            "index",
            refs.to_str().unwrap(),
            "-o",
            index.to_str().unwrap()
        ])),
        0
    );
    let mut bytes = fs::read(&index).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    fs::write(&index, &bytes).unwrap();

    let out = run(&[
        "query",
        "--index",
        index.to_str().unwrap(),
        "--max-dist",
        "3",
        refs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("checksum mismatch"),
        "{}",
        stderr(&out)
    );
    assert!(out.stdout.is_empty());

    bytes[0] = b'Z';
    fs::write(&index, &bytes).unwrap();
    let out = run(&[
        "query",
        "--index",
        index.to_str().unwrap(),
        "--top-k",
        "1",
        refs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn query_too_short_for_the_index_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs.fa");
    let index = dir.path().join("refs.dph");
    write_refs(&refs, 5, 256);
    assert_eq!(
        code(&run(&[
            "index",
            refs.to_str().unwrap(),
            "-o",
            index.to_str().unwrap()
        ])),
        0
    );
    let out = run_stdin(
        &[
            "query",
            "--index",
            index.to_str().unwrap(),
            "--max-dist",
            "5",
        ],
        ">q\nACGTACGTA\n",
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn failed_index_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("bad.fa");
    let index = dir.path().join("bad.dph");
    fs::write(&refs, ">x\nACGTXACGT\n").unwrap();
    let out = run(&[
        "index",
        refs.to_str().unwrap(),
        "-o",
        index.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!index.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn unknown_group_is_a_usage_error() {
    let out = run(&["simulate", "--group", "Z", "--n", "10"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Z"));
}

#[test]
fn group_a_histogram_shape_and_determinism() {
    let args = ["simulate", "--group", "A", "--n", "10000", "--seed", "7"];
    let first = run(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let text = stdout(&first);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 6 * 33);
    assert!(lines[1].starts_with("A,100,32,zigzag,0.05,0,"));
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn workers_flag_and_environment_do_not_change_results() {
    let args = [
        "simulate", "--len", "64", "--width", "16", "--n", "500", "--seed", "3",
    ];
    let one = dnaphash()
        .args(["--workers", "1"])
        .args(args)
        .output()
        .unwrap();
    let env = dnaphash()
        .env("DNAPHASH_WORKERS", "3")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    assert_eq!(code(&env), 0, "{}", stderr(&env));
    assert_eq!(one.stdout, env.stdout);
    assert_eq!(
        code(
            &dnaphash()
                .env("DNAPHASH_WORKERS", "0")
                .args(args)
                .output()
                .unwrap()
        ),
        1
    );
}

#[test]
fn per_pair_output_agrees_with_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    let hist = dir.path().join("hist.csv");
    let out = run(&[
        "simulate",
        "--group",
        "B",
        "--n",
        "200",
        "--seed",
        "5",
        "--rates",
        "0.1,1.0",
        "--identity-control",
        "-o",
        hist.to_str().unwrap(),
        "--per-pair",
        pairs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let pairs = fs::read_to_string(&pairs).unwrap();
    let rows: Vec<&str> = pairs.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 200);
    assert!(rows
        .iter()
        .filter(|r| r.contains(",0.0,"))
        .all(|r| r.ends_with(",0")));

    let plain = run(&[
        "simulate",
        "--group",
        "B",
        "--n",
        "200",
        "--seed",
        "5",
        "--rates",
        "0.1,1.0",
        "--identity-control",
    ]);
    assert_eq!(fs::read(&hist).unwrap(), plain.stdout);
}

#[test]
fn bench_reports_both_phases() {
    let out = run(&[
        "--workers",
        "1",
        "bench",
        "--len",
        "100",
        "--width",
        "64",
        "--n",
        "2000",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    for key in [
        "generation_per_second:",
        "hashes_per_second:",
        "generation_share:",
        "workers: 1",
    ] {
        assert!(text.contains(key), "missing {key} in {text}");
    }
}
