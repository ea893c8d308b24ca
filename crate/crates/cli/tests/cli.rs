use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn quadctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadctl"))
        .args(args)
        .output()
        .unwrap()
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const HOVER: &str = r#"
name = "short"
duration = 1.0
[initial]
position = [0.0, 0.0, -1.0]
[trajectory]
kind = "hover"
point = [0.0, 0.0, -1.0]
"#;

#[test]
fn run_writes_log_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", HOVER);
    let out_dir = dir.path().join("out");
    let o = quadctl(&[
        "run",
        sc.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--override",
        "duration=0.5",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("short.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    assert!(csv.starts_with("t,px,py,pz,"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("short.metrics.json")).unwrap())
            .unwrap();
    assert_eq!(json["diverged"], false);
    assert_eq!(json["records"], 50);

    let m = quadctl(&["metrics", out_dir.join("short.csv").to_str().unwrap()]);
    assert_eq!(m.status.code(), Some(0));
    let printed: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
    assert_eq!(printed["records"], 50);

    let log = out_dir.join("short.csv");
    let c = quadctl(&["compare", log.to_str().unwrap(), log.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
}

#[test]
fn invalid_scenarios_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", HOVER);
    let bad = write(dir.path(), "bad.toml", "name = \"x\"\nduration = -1.0\n");
    for args in [
        vec!["run", bad.to_str().unwrap()],
        vec!["run", sc.to_str().unwrap(), "--override", "inner.c1=7"],
        vec![
            "run",
            sc.to_str().unwrap(),
            "--override",
            "vehicle.mass=0.0",
        ],
        vec![
            "run",
            sc.to_str().unwrap(),
            "--override",
            "initial.attitude=[0.0, 0.0, 0.0, 0.0]",
        ],
    ] {
        let o = quadctl(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn divergence_exits_3_and_still_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", HOVER);
    let o = quadctl(&[
        "run",
        sc.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "initial.omega=[1e7, 0.0, 0.0]",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("short.metrics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["diverged"], true);
}

#[test]
fn missing_files_exit_1() {
    assert_eq!(
        quadctl(&["run", "/nonexistent.toml"]).status.code(),
        Some(1)
    );
    assert_eq!(
        quadctl(&["metrics", "/nonexistent.csv"]).status.code(),
        Some(1)
    );
}

#[test]
fn sweep_reports_the_worst_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    std::fs::create_dir(&sweep).unwrap();
    write(&sweep, "a.toml", HOVER);
    write(&sweep, "b.toml", &HOVER.replace("\"short\"", "\"other\""));
    let out = dir.path().join("out");
    let o = quadctl(&[
        "sweep",
        sweep.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("short.csv").exists() && out.join("other.csv").exists());
    write(
        &sweep,
        "c.toml",
        &HOVER
            .replace("\"short\"", "\"bad\"")
            .replace("[initial]", "[initial]\nomega = [1e7, 0.0, 0.0]"),
    );
    assert_eq!(
        quadctl(&[
            "sweep",
            sweep.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn shipped_helix_scenario_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = quadctl(&[
        "run",
        scenarios().join("helix_perturbed.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "duration=5.0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("helix_perturbed: final position RMSE"));
}
