//! End-to-end tests of the `srreg` binary: exit codes, determinism of
//! generated datasets and reports, config-file precedence, and report
//! reload.

use std::path::PathBuf;
use std::process::{Command, Output};

fn srreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("srreg_cli_{name}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_exits_zero() {
    let out = srreg(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("bench"));
}

#[test]
fn usage_errors_exit_one() {
    // unknown flag
    assert_eq!(srreg(&["solve", "--frobnicate"]).status.code(), Some(1));
    // missing data source
    assert_eq!(
        srreg(&["solve", "--solver", "pmm"]).status.code(),
        Some(1)
    );
    // convex-only solver with a nonconvex penalty
    let out = srreg(&[
        "solve", "--example", "1", "--m", "40", "--n", "8", "--solver", "dadmm", "--reg", "mcp",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dadmm"));
    // bad example index
    assert_eq!(
        srreg(&["gen", "--example", "9", "--out", "/tmp"]).status.code(),
        Some(1)
    );
}

#[test]
fn io_errors_exit_three() {
    let out = srreg(&["solve", "--data", "/nonexistent/file.libsvm", "--solver", "pmm"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn overfit_instances_exit_two() {
    let dir = tmpdir("overfit");
    let path = dir.join("tiny.libsvm");
    // X = I2, b = (1, 2): a tiny lambda drives the residual to zero and the
    // KKT residual is undefined
    std::fs::write(&path, "1 1:1\n2 2:1\n").unwrap();
    let out = srreg(&[
        "solve",
        "--data",
        path.to_str().unwrap(),
        "--solver",
        "pmm",
        "--lambda-c",
        "0.0001",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn gen_is_deterministic_and_reloadable() {
    let dir_a = tmpdir("gen_a");
    let dir_b = tmpdir("gen_b");
    for dir in [&dir_a, &dir_b] {
        let out = srreg(&[
            "gen", "--example", "2", "--seed", "5", "--m", "60", "--n", "12", "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in [
        "exmp2_seed5_train.libsvm",
        "exmp2_seed5_val.libsvm",
        "exmp2_seed5_test.libsvm",
        "exmp2_seed5_truth.json",
    ] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // generated files are consumable by solve
    let train = dir_a.join("exmp2_seed5_train.libsvm");
    let out = srreg(&[
        "solve",
        "--data",
        train.to_str().unwrap(),
        "--solver",
        "padmm",
        "--lambda-c",
        "1",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with('#') || line.starts_with("kind,") {
                line.to_string()
            } else {
                let mut f: Vec<&str> = line.split(',').collect();
                if f.len() == 16 {
                    f[13] = "-";
                }
                f.join(",")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_reports_are_deterministic_and_reload() {
    let dir = tmpdir("bench");
    let (p1, p2) = (dir.join("r1.csv"), dir.join("r2.csv"));
    for p in [&p1, &p2] {
        let out = srreg(&[
            "bench",
            "--example",
            "1",
            "--m",
            "60",
            "--n",
            "12",
            "--solvers",
            "pmm,padmm",
            "--lambda-cs",
            "0.5,1",
            "--seeds",
            "3,4",
            "--threads",
            "2",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(&p1).unwrap();
    let b = std::fs::read_to_string(&p2).unwrap();
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));

    // lossless reload through the library parser
    let report = srreg::bench::Report::from_csv(&a).unwrap();
    assert_eq!(report.rows.len(), 8);
    assert_eq!(report.summaries.len(), 4);
    assert_eq!(report.to_csv(), a);

    // json output round-trips too
    let pj = dir.join("r.json");
    let out = srreg(&[
        "bench", "--example", "1", "--m", "60", "--n", "12", "--solvers", "pmm", "--lambda-cs",
        "1", "--seeds", "3", "--format", "json", "--out",
        pj.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let parsed = srreg::bench::Report::from_json(&std::fs::read_to_string(&pj).unwrap()).unwrap();
    assert_eq!(parsed.rows.len(), 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_merges_under_cli_flags() {
    let dir = tmpdir("config");
    let cfg = dir.join("run.conf");
    std::fs::write(
        &cfg,
        "example = 1\nm = 60\nn = 12\nlambda-c = 2.0\nsolver = padmm\n# comment line\n",
    )
    .unwrap();
    // config alone
    let out = srreg(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("lambda_c = 2"), "stdout: {text}");
    assert!(text.contains("solver       padmm"));
    // CLI flag overrides the file
    let out = srreg(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda-c",
        "0.5",
        "--solver",
        "pmm",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("lambda_c = 0.5"), "stdout: {text}");
    assert!(text.contains("solver       pmm"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn diag_emits_the_bound_report() {
    let out = srreg(&["diag", "--example", "1", "--seed", "3", "--m", "80", "--n", "20"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("diag prints valid json");
    assert!(v["lemma33_ok"].is_boolean());
    assert!(v["c_u"].is_number());
    assert!(v["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_writes_report_files() {
    let dir = tmpdir("solve_out");
    let p = dir.join("row.csv");
    let out = srreg(&[
        "solve", "--example", "3", "--m", "60", "--n", "10", "--solver", "pmm", "--reg", "scad",
        "--lambda-c", "1", "--out",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = srreg::bench::Report::from_csv(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].solver, "pmm");
    assert!(report.rows[0].converged);
    std::fs::remove_dir_all(&dir).ok();
}
