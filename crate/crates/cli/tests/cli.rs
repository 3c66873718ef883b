use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clustersync")).args(args).output().unwrap()
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_preset_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("case2.csv");
    let summary = dir.path().join("case2.json");
    let out = cli(&[
        "run",
        "--preset",
        "case2",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("impulses           166"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,e_norm_1,e_norm_2,e_norm_3,e_norm_4,e_norm_5,V,limit\n"));
    let json = std::fs::read_to_string(&summary).unwrap();
    assert!(json.contains("\"impulses\": 166"));
}

#[test]
fn run_config_with_overrides() {
    let out = cli(&[
        "run",
        "--config",
        config_path("case3").to_str().unwrap(),
        "--horizon",
        "1",
        "--step",
        "0.002",
        "--tol",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("settled (tol 1.0e-2)"), "{text}");
    assert!(text.contains("settling estimate"));
}

#[test]
fn check_exit_codes_follow_criteria() {
    for name in ["case2", "case3"] {
        let out = cli(&["check", "--config", config_path(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
        assert!(stdout(&out).contains("PASS"));
    }

    let dir = tempfile::tempdir().unwrap();
    let failing = dir.path().join("weak.toml");
    let text = std::fs::read_to_string(config_path("case3")).unwrap().replace("beta = 2.0", "beta = 1.0");
    std::fs::write(&failing, text).unwrap();
    let out = cli(&["check", "--config", failing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "[network]\nn = 2\n").unwrap();
    let out = cli(&["run", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = cli(&["check", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn conflicting_arguments_are_rejected() {
    let out = cli(&["run", "--preset", "case1", "--config", config_path("case1").to_str().unwrap()]);
    assert!(!out.status.success());
    let out = cli(&["run"]);
    assert!(!out.status.success());
    let out = cli(&["run", "--preset", "case9"]);
    assert!(!out.status.success());
}
