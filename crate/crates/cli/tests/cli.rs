use std::path::PathBuf;
use std::process::{Command, Output};

use fbl_noma::awgn::{AccessScheme, User};
use fbl_noma::report::read_csv;
use fbl_noma::Flags;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fbl-noma"));
    cmd.env_remove("FBL_NOMA_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn help_matches_golden() {
    let mut text = String::new();
    for args in [
        &["--help"][..],
        &["eval", "--help"],
        &["sweep", "--help"],
        &["reproduce", "--help"],
        &["validate", "--help"],
    ] {
        let out = run(args);
        assert!(out.status.success());
        text.push_str(&format!("$ fbl-noma {}\n", args.join(" ")));
        text.push_str(&String::from_utf8(out.stdout).unwrap());
        text.push('\n');
    }
    let path = golden_dir().join("help.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, golden, "help text changed; rerun with UPDATE_GOLDEN=1 if intended");
}

#[test]
fn eval_awgn_noma_point() {
    let out = run(&["eval", "--channel", "awgn", "--scheme", "noma", "--k", "500", "--n", "500", "--p1-db", "10", "--p2-db", "10"]);
    assert!(out.status.success());
    let ds = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(ds.records.len(), 2);
    assert!(ds.records.iter().all(|r| r.scheme == AccessScheme::Noma));
    assert!(ds.records[0].epsilon < 1e-100);
    assert!((ds.records[1].epsilon - 0.888_985).abs() < 1e-5);
    assert_eq!(ds.metadata.get("command"), Some("eval"));
    // The resolved config goes to stderr.
    assert!(String::from_utf8_lossy(&out.stderr).contains("[frame]"));
}

#[test]
fn eval_rayleigh_noma_point() {
    let out = run(&["eval", "--channel", "rayleigh", "--scheme", "noma"]);
    assert!(out.status.success());
    let ds = read_csv(&out.stdout[..]).unwrap();
    let user1 = ds.records.iter().find(|r| r.user == User::One).unwrap();
    assert!((user1.epsilon - 0.1578).abs() < 1e-3);
}

#[test]
fn eval_from_config_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("point.toml");
    std::fs::write(&cfg, "[frame]\nk = 300\n[scheme]\nchannel = \"awgn\"\nschemes = [\"oma\"]\n").unwrap();
    let out = run(&["eval", "--config", cfg.to_str().unwrap(), "--n", "600"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ds = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(ds.records.len(), 2);
    assert!(ds.records.iter().all(|r| r.k == 300 && r.n == 600 && r.scheme == AccessScheme::Oma));
}

#[test]
fn exit_codes() {
    // Missing required flag.
    assert_eq!(run(&["eval", "--channel", "awgn"]).status.code(), Some(2));
    // Unparseable value.
    assert_eq!(run(&["eval", "--channel", "awgn", "--scheme", "cdma"]).status.code(), Some(2));
    // Out-of-domain split.
    assert_eq!(run(&["eval", "--channel", "awgn", "--scheme", "oma", "--beta", "1.5"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[frame]\nk = 500\nbogus = 1\n").unwrap();
    let out = run(&["sweep", bad.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("line 3"), "{err}");
}

#[test]
fn sweep_flags_short_blocks_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(
        &cfg,
        "[scheme]\nchannel = \"awgn\"\n[sweep]\naxis = \"n\"\nstart = 50\nstop = 200\nstep = 50\n",
    )
    .unwrap();
    let out = bin()
        .args(["sweep", cfg.to_str().unwrap()])
        .env("FBL_NOMA_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv"))
        .unwrap();
    assert!(csv.file_name().unwrap().to_str().unwrap().starts_with("sweep_"));
    let ds = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(ds.records.len(), 4 * 4);
    assert!(ds.records.iter().filter(|r| r.n == 50).all(|r| r.flags.contains(Flags::SHORT_BLOCK)));
    assert!(String::from_utf8_lossy(&out.stdout).contains("argmax NOMA User 1"));
}

#[test]
fn reproduce_writes_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "fig7", "--out-dir", dir.path().to_str().unwrap(), "--strict"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[PASS] throughput M=3 < M=2"));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("fig7_") && n.ends_with(".csv")));
    assert!(names.iter().any(|n| n.starts_with("fig7_") && n.ends_with(".dat")));
}

#[test]
fn strict_reproduce_reports_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "fig5", "--out-dir", dir.path().to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

#[test]
fn validate_reports_sinr_model_gap() {
    let out = run(&["validate", "--trials", "100000", "--sinr-model", "full-noise"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sinr-model gap"));
    assert!(stdout.contains("PASS: max |z|"));
}
