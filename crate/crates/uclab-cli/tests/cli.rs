//! End-to-end CLI contract tests: exit codes, report emission, determinism,
//! and the plot subcommand.

use std::path::Path;
use std::process::{Command, Output};

fn uclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uclab"))
        .args(args)
        .output()
        .expect("spawn uclab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn unknown_subcommand_is_a_config_error() {
    let out = uclab(&["frobnicate"]);
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[domain]\nnn = 3\n").unwrap();
    let out = uclab(&["chain", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nn"));
}

#[test]
fn empty_experiment_list_gives_header_only_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    // A config file that lists no experiments at all.
    std::fs::write(&cfg, "[run]\nseed = 7\n").unwrap();
    let outdir = dir.path().join("out");
    let out = uclab(&["chain", "--config", cfg.to_str().unwrap(), "--out", outdir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(outdir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "expected header only, got:\n{csv}");
    assert!(csv.starts_with("experiment,kind,id,"));
}

#[test]
fn frequency_default_run_passes_and_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let o = uclab(&["frequency", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    }
    for name in ["report.csv", "report.json"] {
        assert_eq!(
            std::fs::read(out1.join(name)).unwrap(),
            std::fs::read(out2.join(name)).unwrap(),
            "{name} differs between identical reruns"
        );
    }
}

#[test]
fn failing_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fail.cfg");
    // Identity defect of a grid profile can never meet a 1e-15 bar.
    std::fs::write(
        &cfg,
        "[experiment]\nkind = frequency\nfield = exp_x1\ntol = 1e-15\n",
    )
    .unwrap();
    let outdir = dir.path().join("out");
    let out = uclab(&["frequency", "--config", cfg.to_str().unwrap(), "--out", outdir.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "stdout: {}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    // The report is still written for post-mortem inspection.
    assert!(outdir.join("report.csv").exists());
}

#[test]
fn plot_renders_frequency_profile_and_rejects_unknown_columns() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("run");
    let o = uclab(&["frequency", "--out", outdir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report = outdir.join("report.json");
    let svg_path = dir.path().join("n_of_r.svg");
    let o = uclab(&[
        "plot",
        report.to_str().unwrap(),
        "--profile",
        "frequency_profile",
        "--x",
        "r",
        "--y",
        "N",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));

    let o = uclab(&[
        "plot",
        report.to_str().unwrap(),
        "--x",
        "r",
        "--y",
        "no_such_column",
        "--out",
        dir.path().join("x.svg").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_column"));
}

#[test]
fn grid_and_mode_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("out");
    let o = uclab(&[
        "doubling",
        "--grid",
        "24",
        "--mode",
        "fit",
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(outdir.join("report.json")).unwrap();
    assert!(json.contains("cells = 24"));
    assert!(json.contains("mode = fit"));
    assert!(Path::new(&outdir).join("report.csv").exists());
}
