//! End-to-end runs of the `ggl` binary on a small generated problem.

use std::path::Path;
use std::process::Command;

use ggl::datagen::{read_truth, reparam_to_lambda};

fn ggl(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ggl"))
        .args(args)
        .env("GGL_THREADS", "2")
        .output()
        .expect("failed to launch ggl")
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

fn generate(dir: &Path) -> String {
    let out = ggl(&[
        "generate",
        "--p",
        "15",
        "--K",
        "3",
        "--samples",
        "800",
        "--seed",
        "4",
        "--out",
        &path(dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path(&dir.join("manifest.json"))
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn generate_solve_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem");
    let manifest = generate(&problem);
    let truth = read_truth(&problem.join("truth.json")).unwrap();
    assert_eq!(truth.k_classes(), 3);

    let mut objectives = Vec::new();
    for solver in ["ppdna", "admm"] {
        let out_dir = dir.path().join(solver);
        let out = ggl(&[
            "solve",
            "--manifest",
            &manifest,
            "--solver",
            solver,
            "--w1",
            "0.05",
            "--w2",
            "0.2",
            "--out",
            &path(&out_dir),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        for k in 1..=3 {
            assert!(out_dir.join(format!("theta_{k}.csv")).exists());
        }
        assert!(out_dir.join("trace.csv").exists());
        let summary = json(&out_dir.join("summary.json"));
        assert_eq!(summary["converged"], true);
        assert!(summary["eta"].as_f64().unwrap() <= 1e-6);
        let expected = reparam_to_lambda(0.05, 0.2).unwrap();
        assert_eq!(summary["lambda1"].as_f64().unwrap(), expected.lambda1);
        assert_eq!(summary["lambda2"].as_f64().unwrap(), expected.lambda2);
        objectives.push(summary["pobj"].as_f64().unwrap());
        let solution = json(&out_dir.join("solution.json"));
        assert_eq!(solution["p"], 15);
        assert!(!solution["entries"].as_array().unwrap().is_empty());
    }
    assert!((objectives[0] - objectives[1]).abs() <= 1e-5 * (1.0 + objectives[0].abs()));

    let report = dir.path().join("report.json");
    let out = ggl(&[
        "metrics",
        "--truth",
        &path(&problem.join("truth.json")),
        "--estimate",
        &path(&dir.path().join("ppdna")),
        "--out",
        &path(&report),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&report);
    assert_eq!(
        report["true_edges"].as_u64().unwrap() as usize,
        truth.total_edges()
    );
    assert!(report["total"]["tp"].as_u64().unwrap() > 0);
}

#[test]
fn compare_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&dir.path().join("problem"));
    let table = dir.path().join("compare.csv");
    let out = ggl(&[
        "compare",
        "--manifest",
        &manifest,
        "--grid",
        "0.05:0.2",
        "0.1:0.2",
        "--reparam",
        "--out",
        &path(&table),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut reader = csv::Reader::from_path(&table).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "obj_agreement"));
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let status = headers.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().all(|r| &r[status] == "ok"));

    let sweep = dir.path().join("sweep.json");
    let out = ggl(&[
        "metrics",
        "--truth",
        &path(&dir.path().join("problem/truth.json")),
        "--manifest",
        &manifest,
        "--grid",
        "0.02:0.2",
        "0.2:0.2",
        "--reparam",
        "--out",
        &path(&sweep),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let points = json(&sweep);
    let points = points.as_array().unwrap();
    assert_eq!(points.len(), 2);
    // A heavier penalty selects fewer edges.
    let selected = |i: usize| points[i]["report"]["selected_edges"].as_u64().unwrap();
    assert!(selected(1) <= selected(0));
}

#[test]
fn rate_writes_a_distance_series() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&dir.path().join("problem"));
    let series = dir.path().join("rate.csv");
    let out = ggl(&[
        "rate",
        "--manifest",
        &manifest,
        "--w1",
        "0.05",
        "--w2",
        "0.2",
        "--policy",
        "growth",
        "--max-outer",
        "15",
        "--out",
        &path(&series),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut reader = csv::Reader::from_path(&series).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["t", "log10_d"]);
    let logs: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert!(logs.len() >= 2);
    assert!(logs.last().unwrap() < &logs[0]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Usage: missing penalty, and a network too small for the neighbor count.
    assert_eq!(
        ggl(&["solve", "--manifest", "m.json", "--out", "o"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ggl(&["generate", "--p", "3", "--out", &path(dir.path())])
            .status
            .code(),
        Some(2)
    );
    // I/O: the manifest does not exist.
    let missing = ggl(&[
        "solve",
        "--manifest",
        &path(&dir.path().join("absent.json")),
        "--lambda1",
        "0.1",
        "--lambda2",
        "0.1",
        "--out",
        &path(&dir.path().join("out")),
    ]);
    assert_eq!(missing.status.code(), Some(4));
    // No convergence: one outer iteration without a warm start cannot reach 1e-10.
    let manifest = generate(&dir.path().join("problem"));
    let capped = ggl(&[
        "solve",
        "--manifest",
        &manifest,
        "--lambda1",
        "0.05",
        "--lambda2",
        "0.01",
        "--tol",
        "1e-10",
        "--max-iters",
        "1",
        "--no-warm-start",
        "--out",
        &path(&dir.path().join("capped")),
    ]);
    assert_eq!(capped.status.code(), Some(3));
    let summary = json(&dir.path().join("capped/summary.json"));
    assert_eq!(summary["converged"], false);
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    generate(&dir.path().join("a"));
    generate(&dir.path().join("b"));
    for name in [
        "manifest.json",
        "cov_1.csv",
        "cov_3.csv",
        "truth.json",
        "truth_2.csv",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between identical runs");
    }
}

#[test]
fn identity_covariances_give_identity_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data =
        ggl::ProblemData::new(vec![nalgebra::DMatrix::identity(6, 6); 3], vec![50; 3]).unwrap();
    let manifest = ggl::datagen::write_problem(dir.path(), &data).unwrap();
    let out_dir = dir.path().join("sol");
    let out = ggl(&[
        "solve",
        "--manifest",
        &path(&manifest),
        "--lambda1",
        "0.1",
        "--lambda2",
        "0.1",
        "--tol",
        "1e-6",
        "--out",
        &path(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(json(&out_dir.join("summary.json"))["eta"].as_f64().unwrap() <= 1e-6);
    for k in 1..=3 {
        let theta =
            ggl::datagen::read_matrix_csv(&out_dir.join(format!("theta_{k}.csv")), false).unwrap();
        assert!((theta - nalgebra::DMatrix::<f64>::identity(6, 6)).amax() < 1e-8);
    }
}

#[test]
fn reparameterized_penalty_matches_raw_weights() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&dir.path().join("problem"));
    // The (w1, w2) pair equivalent to lambda = (5e-3, 5e-4), printed at full
    // precision (about (0.0054, 0.066)).
    let (w1, w2) =
        ggl::datagen::reparam_from_lambda(&ggl::GglParams::new(5e-3, 5e-4).unwrap()).unwrap();
    let (w1, w2) = (format!("{w1}"), format!("{w2}"));
    let run = |name: &str, penalty: [&str; 4]| {
        let out_dir = dir.path().join(name);
        let mut args = vec!["solve", "--manifest", &manifest];
        args.extend(penalty);
        let out_str = path(&out_dir);
        args.extend(["--out", &out_str]);
        let out = ggl(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        json(&out_dir.join("summary.json"))
    };
    let a = run("raw", ["--lambda1", "5e-3", "--lambda2", "5e-4"]);
    let b = run("reparam", ["--w1", &w1, "--w2", &w2]);
    for field in ["lambda1", "lambda2", "pobj", "dobj", "eta"] {
        let (x, y) = (a[field].as_f64().unwrap(), b[field].as_f64().unwrap());
        assert!(
            (x - y).abs() <= 1e-10 * (1.0 + x.abs()),
            "{field}: {x} vs {y}"
        );
    }
}

#[test]
fn metrics_of_the_truth_itself_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem");
    generate(&problem);
    let estimate = dir.path().join("estimate");
    std::fs::create_dir_all(&estimate).unwrap();
    for k in 1..=3 {
        std::fs::copy(
            problem.join(format!("truth_{k}.csv")),
            estimate.join(format!("theta_{k}.csv")),
        )
        .unwrap();
    }
    let report_path = dir.path().join("report.json");
    let truth = path(&problem.join("truth.json"));
    let args = [
        "metrics",
        "--truth",
        &truth,
        "--estimate",
        &path(&estimate),
        "--out",
        &path(&report_path),
    ];
    assert!(ggl(&args).status.success());
    let report = json(&report_path);
    assert_eq!(report["total"]["fp"], 0);
    assert_eq!(report["total"]["fn"], 0);
    assert_eq!(report["sse"].as_f64().unwrap(), 0.0);

    // Missing truth is a usage error.
    let no_truth = ggl(&[
        "metrics",
        "--estimate",
        &path(&estimate),
        "--out",
        &path(&report_path),
    ]);
    assert_eq!(no_truth.status.code(), Some(2));

    // A malformed CSV is an I/O-class failure naming the file.
    std::fs::write(estimate.join("theta_2.csv"), "1,2,x\n").unwrap();
    let bad = ggl(&args);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("theta_2.csv"));
}
