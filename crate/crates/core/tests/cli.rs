use std::path::Path;
use std::process::{Command, Output};

fn meanfield(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanfield"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MEANFIELD_WORKERS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    v["provenance"]["runtime_seconds"] = 0.0.into();
    v
}

#[test]
fn passing_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = meanfield(&["run", "vortex_two_particle", "--out", "a", "--emit-plots", "--seed", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("a");
    for f in ["report.json", "config.toml", "events.jsonl", "plot.gp"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let echo = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 3") && echo.contains("emit_plots = true"));
    assert_eq!(report(&out)["verdicts"][0]["passed"], true);
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "wellposedness_monitors", "--set", "particles=8", "--set", "t_end=0.05", "--set", "dt=1e-3", "--out", "first"];
    meanfield(&args, dir.path());
    let first = dir.path().join("first");
    let echo = first.join("config.toml");
    let o = meanfield(&["run", "--config", echo.to_str().unwrap(), "--out", "second", "--workers", "3"], dir.path());
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&first), report(&dir.path().join("second")));
    let events = std::fs::read_to_string(first.join("events.jsonl")).unwrap();
    assert!(events.lines().all(|l| l.starts_with("{\"event\":")));
    assert!(first.join("mean_energy.csv").exists());
}

#[test]
fn failed_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = meanfield(&["run", "vortex_two_particle", "--set", "dt=0.5", "--out", "x"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL radius_oracle"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&meanfield(&["run", "no_such_scenario"], dir.path())), 2);
    assert_eq!(code(&meanfield(&["run"], dir.path())), 2);
    assert_eq!(code(&meanfield(&["run", "vortex_two_particle", "--set", "dt=-1"], dir.path())), 2);
    assert_eq!(code(&meanfield(&["run", "vortex_two_particle", "--set", "bogus=1"], dir.path())), 2);
    assert_eq!(code(&meanfield(&["frobnicate"], dir.path())), 2);
    std::fs::write(dir.path().join("bad.toml"), "scenario = \"vortex_two_particle\"\nworkers = 0\n").unwrap();
    assert_eq!(code(&meanfield(&["run", "--config", "bad.toml"], dir.path())), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_meanfield"))
        .args(["run", "vortex_two_particle", "--out", "y"])
        .current_dir(dir.path())
        .env("MEANFIELD_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = meanfield(
        &["run", "vortex_entropy_decay", "--set", "grid_n=64", "--set", "dt=0.5", "--out", "cfl"],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let events = std::fs::read_to_string(dir.path().join("cfl/events.jsonl")).unwrap();
    assert!(events.starts_with("{\"event\":\"cfl_rejection\""), "{events}");
    std::fs::write(dir.path().join("junk.mfck"), b"not a checkpoint").unwrap();
    assert_eq!(code(&meanfield(&["inspect", "junk.mfck"], dir.path())), 3);
}

#[test]
fn inspect_prints_shape() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ensemble.mfck");
    let o = meanfield(&["inspect", fixture.to_str().unwrap()], Path::new("."));
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("3") && text.contains("ensemble"), "{text}");
}
