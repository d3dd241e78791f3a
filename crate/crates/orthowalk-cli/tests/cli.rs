//! End-to-end checks of the binary: exit codes, file outputs, and the
//! verify negative controls.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_orthowalk")
}

fn workdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("orthowalk-cli-test-{name}"));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn binary")
}

#[test]
fn grid_generate_produces_sixteen_cells() {
    let dir = workdir("grid16");
    let cfg = write(&dir, "cfg.json", r#"{"kind":"grid","dim":2,"h":0.25}"#);
    let out = dir.join("tiling.json");
    let res = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(parsed["cells"].as_array().unwrap().len(), 16);
    assert_eq!(parsed["dim"], 2);
    // Fresh file passes verify with exit 0.
    let v = run(&["verify", "--config", out.to_str().unwrap()]);
    assert!(v.status.success());
}

#[test]
fn gmc_generate_is_seed_deterministic() {
    let dir = workdir("gmcdet");
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"kind":"gmc","dim":2,"m":1024,"gamma":1.0,"j":7,"k":5,"seed":7}"#,
    );
    let o1 = dir.join("a.json");
    let o2 = dir.join("b.json");
    for o in [&o1, &o2] {
        let res = run(&[
            "generate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
    // A different seed changes the file.
    let o3 = dir.join("c.json");
    let res = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "8",
        "--out",
        o3.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert_ne!(std::fs::read(&o1).unwrap(), std::fs::read(&o3).unwrap());
}

#[test]
fn malformed_config_exits_2_without_partial_file() {
    let dir = workdir("badcfg");
    let cfg = write(&dir, "cfg.json", r#"{"kind":"grid","dim":2}"#);
    let out = dir.join("should_not_exist.json");
    let res = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
    // Missing --config also exits 2.
    let res = run(&["generate"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verify_names_corrupted_conductance() {
    let dir = workdir("corrupt");
    let cfg = write(&dir, "cfg.json", r#"{"kind":"grid","dim":2,"h":0.25}"#);
    let out = dir.join("tiling.json");
    assert!(run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let mut parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let c = parsed["edges"][2]["conductance"].as_f64().unwrap();
    parsed["edges"][2]["conductance"] = serde_json::json!(c * 2.0);
    let bad = write(&dir, "bad.json", &parsed.to_string());
    let res = run(&["verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(
        stdout.contains("edge-conductance-identity"),
        "failure list should name the edge identity: {stdout}"
    );
}

#[test]
fn verify_names_displaced_site() {
    let dir = workdir("displaced");
    let cfg = write(&dir, "cfg.json", r#"{"kind":"poisson","dim":2,"m":256,"seed":4}"#);
    let out = dir.join("tiling.json");
    assert!(run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let mut parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // Nudge one site: small enough that the file still loads, large enough
    // that its edges are no longer perpendicular to the shared facets.
    let x = parsed["sites"][5][0].as_f64().unwrap();
    parsed["sites"][5][0] = serde_json::json!(x + 1e-4);
    let bad = write(&dir, "bad.json", &parsed.to_string());
    let res = run(&["verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(
        stdout.contains("orthogonality"),
        "failure list should name orthogonality: {stdout}"
    );
}

#[test]
fn counterexample_csv_has_formula_column() {
    let dir = workdir("cecsv");
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"d":3,"big_n_list":[2],"period":4,"n_walks":2000,"seed":1}"#,
    );
    let res = run(&["counterexample", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("2,"))
        .expect("row for N=2");
    let fields: Vec<&str> = row.split(',').collect();
    let p_exact: f64 = fields[1].parse().unwrap();
    assert!((p_exact - 5.0 / 13.0).abs() < 1e-10);
}

#[test]
fn solve_rejects_unknown_harmonic() {
    let dir = workdir("badharm");
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"tiling":{"kind":"grid","dim":2,"h":0.25},"harmonic":"nope"}"#,
    );
    let res = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn walk_trace_is_seeded_and_well_formed() {
    let dir = workdir("walktrace");
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"kind":"counterexample","d":3,"big_n":2,"period":4,"seed":5}"#,
    );
    let a = run(&["walk", "--config", cfg.to_str().unwrap()]);
    let b = run(&["walk", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    // Header plus at least one step.
    assert!(data.len() >= 2);
    assert!(data[0].starts_with("step,vertex,x1"));
}
