use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonal-market"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_passes_at_default_tolerances() {
    let out = cli(&["validate"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn validate_fails_at_zero_tolerance() {
    let out = cli(&["validate", "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generate_solve_optimize_report() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = tmp.path().join("scenario");
    let small = ["--zones", "6", "--weeks", "1", "--hours-per-week", "12"];

    let out = cli(&[&["generate", "--out", path(&scen)][..], &small[..]].concat());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let cal = tmp.path().join("calibrated");
    assert!(
        cli(&["calibrate", "--input", path(&scen), "--out", path(&cal)])
            .status
            .success()
    );
    let solved = tmp.path().join("solved");
    assert!(
        cli(&["solve", "--input", path(&scen), "--out", path(&solved)])
            .status
            .success()
    );

    let run = tmp.path().join("run");
    let out = cli(&[
        "optimize",
        "--input",
        path(&scen),
        "--case",
        "seventy",
        "--out",
        path(&run),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "run_manifest.json",
        "welfare_deltas.csv",
        "availability.csv",
        "curtailment_histogram.csv",
    ] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    assert!(cli(&["report", "--run", path(&run)]).status.success());

    let replay = tmp.path().join("replay");
    let manifest = run.join("run_manifest.json");
    assert!(cli(&[
        "optimize",
        "--manifest",
        path(&manifest),
        "--out",
        path(&replay)
    ])
    .status
    .success());
    assert_eq!(
        std::fs::read(run.join("welfare_deltas.csv")).unwrap(),
        std::fs::read(replay.join("welfare_deltas.csv")).unwrap()
    );
}

#[test]
fn bad_input_is_reported_not_panicked() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&[
        "solve",
        "--input",
        path(&tmp.path().join("missing")),
        "--out",
        path(tmp.path()),
    ]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}
