use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heisenflag"))
}

fn write_cfg(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn field_cfg(dir: &Path, params: Value) -> PathBuf {
    write_cfg(
        dir,
        "field.json",
        &json!({"experiment": "field", "grid": {"z_half": 4, "t_half": 16, "n_z": 16, "n_t": 64},
                "params": params, "out_dir": dir.join("out")}),
    )
}

#[test]
fn zero_field_has_zero_norms() {
    let d = tempfile::tempdir().unwrap();
    let cfg = field_cfg(d.path(), json!({"kind": "zero"}));
    let o = run(&["field", "gen", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let path = String::from_utf8(o.stdout).unwrap().trim().to_string();
    let n = stdout_json(&run(&["field", "norm", "--input", &path]));
    assert_eq!(n["l1"], 0.0);
    assert_eq!(n["linf"], 0.0);
}

#[test]
fn indicator_norm_is_the_tube_measure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = field_cfg(d.path(), json!({"kind": "indicator", "radius": 1.0, "half_height": 2.0}));
    let o = run(&["field", "gen", "--config", cfg.to_str().unwrap()]);
    let path = String::from_utf8(o.stdout).unwrap().trim().to_string();
    let n = stdout_json(&run(&["field", "norm", "--input", &path, "--p", "3"]));
    assert_eq!(n["l1"], 12.375);
    assert!((n["l3"].as_f64().unwrap() - 12.375f64.cbrt()).abs() < 1e-12);
    let info = stdout_json(&run(&["field", "info", "--input", &path]));
    assert!(info.to_string().contains("16"));
}

#[test]
fn convert_writes_a_slice() {
    let d = tempfile::tempdir().unwrap();
    let cfg = field_cfg(d.path(), json!({"kind": "gaussian", "wz": 1.0, "wt": 2.0}));
    let o = run(&["field", "gen", "--config", cfg.to_str().unwrap(), "--kind", "gaussian"]);
    let path = String::from_utf8(o.stdout).unwrap().trim().to_string();
    let csv = d.path().join("slice.csv");
    let o = run(&["field", "convert", "--input", &path, "--t", "0.5", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let data = text.lines().filter(|l| !l.starts_with('#')).count();
    // header plus one row per z node
    assert_eq!(data, 1 + 16 * 16);
    let o = run(&["field", "convert", "--input", &path, "--t", "99"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn equivalence_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        d.path(),
        "eq.json",
        &json!({"experiment": "equivalence", "grid": {"z_half": 2, "t_half": 4, "n_z": 8, "n_t": 16},
                "seed": 7, "params": {"n_random": 2}}),
    );
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = d.path().join(format!("run{k}"));
        let o = run(&["equivalence", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(std::fs::read(out.join("equivalence.csv")).unwrap());
        assert!(out.join("equivalence_ratios.csv").is_file());
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].clone()).unwrap();
    assert!(text.starts_with("# "));
    assert!(text.contains("config_hash"));
}

#[test]
fn multiplier_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        d.path(),
        "mu.json",
        &json!({"experiment": "multiplier", "grid": {"z_half": 2, "t_half": 4, "n_z": 8, "n_t": 16},
                "params": {"multipliers": ["rational"], "js": [1, 2], "ells": [-1, 0], "budget": null},
                "out_dir": d.path().join("mu")}),
    );
    let o = run(&["multiplier", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(d.path().join("mu/multiplier.json")).unwrap()).unwrap();
    assert_eq!(v["summaries"].as_array().unwrap().len(), 1);
    assert!(v["identity"]["rel_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["equivalence", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let odd = write_cfg(
        d.path(),
        "odd.json",
        &json!({"experiment": "equivalence", "grid": {"z_half": 3, "t_half": 12, "n_z": 12, "n_t": 37}}),
    );
    assert_eq!(run(&["equivalence", "--config", odd.to_str().unwrap()]).status.code(), Some(2));
    let unknown = write_cfg(
        d.path(),
        "unk.json",
        &json!({"experiment": "equivalence", "grid": {"z_half": 3, "t_half": 12, "n_z": 12, "n_t": 36}, "colour": 1}),
    );
    assert_eq!(run(&["equivalence", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    let cfg = field_cfg(d.path(), json!({"kind": "zero"}));
    assert_eq!(run(&["equivalence", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["field", "gen", "--config", cfg.to_str().unwrap(), "--kind", "plaid"]).status.code(), Some(2));
    let bad = d.path().join("bad.hfld");
    std::fs::write(&bad, b"not a field").unwrap();
    let o = run(&["field", "info", "--input", bad.to_str().unwrap()]);
    assert!(!o.status.success());
}
