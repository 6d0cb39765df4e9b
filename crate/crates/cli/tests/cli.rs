use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cbe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbe"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to run cbe")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = cbe(dir, args);
    assert!(
        out.status.success(),
        "cbe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen(dir: &Path, n: &str, d: &str, seed: &str) -> PathBuf {
    ok(
        dir,
        &[
            "gen-data",
            "--kind",
            "clustered",
            "--n",
            n,
            "--d",
            d,
            "--seed",
            seed,
            "--n-queries",
            "100",
            "--queries-out",
            "q.cbem",
            "--out",
            "x.cbem",
        ],
    );
    dir.join("x.cbem")
}

/// Recall@10 from a one-curve CSV written by `eval-recall`.
fn recall_at_10(csv: &str) -> f64 {
    csv.lines()
        .find_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f.len() == 4 && f[2] == "10").then(|| f[3].parse().unwrap())
        })
        .expect("no m = 10 row")
}

#[test]
fn gen_data_is_reproducible() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "50", "16", "4");
    let first = fs::read(dir.path().join("x.cbem")).unwrap();
    gen(dir.path(), "50", "16", "4");
    assert_eq!(first, fs::read(dir.path().join("x.cbem")).unwrap());
    assert_eq!(first.len(), 24 + 50 * 16 * 4);
    let out = cbe(
        dir.path(),
        &[
            "gen-data", "--kind", "gaussian", "--n", "5", "--d", "4", "--out", "g.cbem",
        ],
    );
    assert!(
        stderr(&out).contains("seed: 0"),
        "resolved config must show the seed"
    );
}

#[test]
fn encode_is_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    gen(p, "300", "64", "1");
    for method in ["cbe-rand", "lsh", "bilinear", "fjlt"] {
        let base = [
            "encode", "--method", method, "--seed", "7", "--k", "64", "--in", "x.cbem",
        ];
        let mut one = base.to_vec();
        one.extend(["--out", "a.cbec", "--threads", "1"]);
        ok(p, &one);
        let mut many = base.to_vec();
        many.extend(["--out", "b.cbec", "--threads", "4"]);
        ok(p, &many);
        let a = fs::read(p.join("a.cbec")).unwrap();
        assert_eq!(a, fs::read(p.join("b.cbec")).unwrap(), "{method}");
        ok(p, &one);
        assert_eq!(a, fs::read(p.join("a.cbec")).unwrap(), "{method}");
    }
}

#[test]
fn trained_params_beat_random_on_recall() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    gen(p, "2000", "64", "1");
    ok(
        p,
        &[
            "train", "--in", "x.cbem", "--k", "64", "--seed", "3", "--out", "opt.cbep",
        ],
    );
    let trace = fs::read_to_string(p.join("opt.cbep.trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,step,objective\n"));
    for (label, enc) in [
        ("opt", vec!["--params", "opt.cbep"]),
        (
            "rand",
            vec!["--method", "cbe-rand", "--seed", "3", "--k", "64"],
        ),
    ] {
        for (input, codes) in [("x.cbem", "db"), ("q.cbem", "q")] {
            let out = format!("{label}-{codes}.cbec");
            let mut args = vec!["encode", "--in", input, "--out", &out];
            args.extend(&enc);
            ok(p, &args);
        }
        let (cdb, cq, csv) = (
            format!("{label}-db.cbec"),
            format!("{label}-q.cbec"),
            format!("{label}.csv"),
        );
        ok(
            p,
            &[
                "eval-recall",
                "--db",
                "x.cbem",
                "--queries",
                "q.cbem",
                "--codes-db",
                &cdb,
                "--codes-q",
                &cq,
                "--label",
                label,
                "--out",
                &csv,
            ],
        );
    }
    let opt = recall_at_10(&fs::read_to_string(p.join("opt.csv")).unwrap());
    let rand = recall_at_10(&fs::read_to_string(p.join("rand.csv")).unwrap());
    assert!(opt >= rand, "cbe-opt {opt} below cbe-rand {rand}");
}

#[test]
fn preconditioned_encode() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    gen(p, "20", "64", "2");
    ok(
        p,
        &[
            "encode",
            "--method",
            "cbe-rand",
            "--seed",
            "1",
            "--k",
            "32",
            "--precondition",
            "block=16",
            "--in",
            "x.cbem",
            "--out",
            "a.cbec",
        ],
    );
    ok(
        p,
        &[
            "encode", "--method", "cbe-rand", "--seed", "1", "--k", "32", "--in", "x.cbem",
            "--out", "b.cbec",
        ],
    );
    assert_ne!(
        fs::read(p.join("a.cbec")).unwrap(),
        fs::read(p.join("b.cbec")).unwrap()
    );
    let out = cbe(
        p,
        &[
            "encode",
            "--method",
            "cbe-rand",
            "--seed",
            "1",
            "--k",
            "32",
            "--precondition",
            "block=3",
            "--in",
            "x.cbem",
            "--out",
            "c.cbec",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--precondition"));
}

#[test]
fn missing_input_is_a_data_error_naming_the_file() {
    let dir = TempDir::new().unwrap();
    let out = cbe(
        dir.path(),
        &[
            "encode",
            "--method",
            "lsh",
            "--seed",
            "1",
            "--k",
            "8",
            "--in",
            "nope.cbem",
            "--out",
            "a.cbec",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.cbem"));
}

#[test]
fn corrupt_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.cbem"), b"CBEX0000").unwrap();
    let out = cbe(
        dir.path(),
        &["train", "--in", "bad.cbem", "--k", "8", "--out", "p.cbep"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.cbem"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(cbe(p, &["encode", "--bogus"]).status.code(), Some(1));
    assert_eq!(cbe(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(cbe(p, &["--help"]).status.code(), Some(0));
    gen(p, "20", "16", "1");
    let out = cbe(
        p,
        &[
            "encode", "--method", "cbe-opt", "--seed", "1", "--k", "8", "--in", "x.cbem", "--out",
            "a.cbec",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = cbe(p, &["encode", "--in", "x.cbem", "--out", "a.cbec"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--seed"));
    let out = cbe(
        p,
        &["train", "--in", "x.cbem", "--k", "17", "--out", "p.cbep"],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = cbe(
        p,
        &[
            "train", "--method", "lsh", "--in", "x.cbem", "--k", "8", "--out", "p.cbep",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--method"));
    ok(
        p,
        &[
            "train", "--in", "x.cbem", "--k", "8", "--iters", "1", "--out", "p.cbep",
        ],
    );
    let out = cbe(
        p,
        &[
            "encode", "--params", "p.cbep", "--method", "lsh", "--in", "x.cbem", "--out", "a.cbec",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("p.cbep"));
}

#[test]
fn unbounded_objective_exits_three() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(
        p,
        &[
            "gen-data", "--kind", "gaussian", "--n", "4", "--d", "8", "--seed", "1", "--out",
            "x.cbem",
        ],
    );
    fs::write(
        p.join("pairs.txt"),
        "[dissimilar]\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n",
    )
    .unwrap();
    let out = cbe(
        p,
        &[
            "train",
            "--in",
            "x.cbem",
            "--k",
            "8",
            "--lambda",
            "0",
            "--mu",
            "100",
            "--constraints",
            "pairs.txt",
            "--out",
            "p.cbep",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn csv_commands() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(
        p,
        &[
            "eval-angle",
            "--theta",
            "0,1.0",
            "--d",
            "32",
            "--k",
            "8,16",
            "--trials",
            "50",
            "--out",
            "angle.csv",
        ],
    );
    let angle = fs::read_to_string(p.join("angle.csv")).unwrap();
    assert!(angle.starts_with("theta,k,trials,mean,variance,bound\n"));
    assert_eq!(angle.lines().count(), 5);
    assert!(angle
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0.0,8,50,0.0,0.0,"));
    let out = ok(
        p,
        &[
            "bench",
            "--d-list",
            "32",
            "--methods",
            "circulant,fjlt",
            "--reps",
            "1",
        ],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method,d,k,metric,value\ncirculant,32,32,ns_per_point,"));
    assert_eq!(text.lines().count(), 5);
    assert_eq!(
        cbe(p, &["bench", "--d-list", "48", "--reps", "1"])
            .status
            .code(),
        Some(1)
    );
}
