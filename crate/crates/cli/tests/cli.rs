use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn porolbm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_porolbm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = porolbm(&[
        "run", "--problem", "manufactured", "--alpha", "0.5", "--nx", "8", "--tf", "0.125", "--out", out,
        "--snapshots", "0,0.125", "--format", "both",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(dir.path());
    assert_eq!(s["diverged"], Value::Bool(false));
    assert!(s["errors"]["p"]["relative"].as_f64().unwrap().is_finite());
    assert_eq!(s["config"]["ne"], "x1");
    for f in ["errors.csv", "fields_t0.csv", "fields_t0.vtk", "fields_t8.csv", "fields_t8.vtk"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 9);
    let t0 = std::fs::read_to_string(dir.path().join("fields_t0.csv")).unwrap();
    assert_eq!(t0.lines().count(), 1 + 64);
}

#[test]
fn identical_configs_give_identical_summaries() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let res = porolbm(&["run", "--nx", "8", "--tf", "0.1", "--r", "1", "--out", d.path().to_str().unwrap()]);
        assert!(res.status.success());
    }
    let (mut sa, mut sb) = (summary(a.path()), summary(b.path()));
    sa["config"]["out"] = Value::Null;
    sb["config"]["out"] = Value::Null;
    assert_eq!(sa, sb);
    let fa = std::fs::read(a.path().join("errors.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.path().join("errors.csv")).unwrap());
}

#[test]
fn summary_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "problem = \"terzaghi\"\nnx = 10\nne = \"x2\"\ntf = 0.05\n").unwrap();
    let first = dir.path().join("first");
    let res = porolbm(&["run", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s1 = summary(&first);
    assert_eq!(s1["n_e"], 20);
    assert_eq!(s1["config"]["dt_rule"], "scaled:0.25");

    let resolved: porolbm::driver::RunConfig = serde_json::from_value(s1["config"].clone()).unwrap();
    let again = dir.path().join("again.toml");
    std::fs::write(&again, resolved.to_toml().unwrap()).unwrap();
    let res = porolbm(&["run", "--config", again.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(summary(&first), s1);

    // Flags override file values.
    let second = dir.path().join("second");
    let res = porolbm(&["run", "--config", cfg.to_str().unwrap(), "--nx", "12", "--out", second.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(summary(&second)["config"]["nx"], 12);
}

#[test]
fn divergence_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let res = porolbm(&[
        "run", "--alpha", "1", "--r", "0", "--nx", "16", "--tf", "3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let s = summary(dir.path());
    assert_eq!(s["diverged"], Value::Bool(true));
    assert!(s["divergence"].as_str().unwrap().contains("diverged"));
}

#[test]
fn invalid_config_is_a_usage_error() {
    assert_eq!(porolbm(&["run", "--r", "2", "--nx", "8"]).status.code(), Some(2));
    assert_eq!(porolbm(&["run", "--ne", "q:0.0001", "--nx", "8"]).status.code(), Some(2));
    assert!(!porolbm(&["run", "--problem", "nonsense"]).status.success());
}

#[test]
fn sweep_tabulates_errors_and_orders() {
    let dir = tempfile::tempdir().unwrap();
    let res = porolbm(&["sweep", "--alpha", "0.5", "--tf", "0.1", "--nx", "8,16", "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("nx,ne,n_e,r,diverged,e_p"));
    let last: Vec<&str> = rows[2].split(',').collect();
    assert_eq!(last[0], "16");
    assert!(last[8].parse::<f64>().unwrap() > 1.0);

    assert_eq!(porolbm(&["sweep", "--nx", "16"]).status.code(), Some(2));
}

#[test]
fn sweep_marks_divergent_cells() {
    let dir = tempfile::tempdir().unwrap();
    let res = porolbm(&[
        "sweep", "--alpha", "1", "--tf", "3", "--nx", "8,16", "--r-list", "0,0.5", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let flags: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(flags.len(), 4);
    assert_eq!(flags[1], "true");
    assert_eq!(flags[3], "false");
}
