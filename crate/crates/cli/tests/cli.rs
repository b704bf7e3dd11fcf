use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qtn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtn")).args(args).output().expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn manifest(dir: &Path, sub: &str) -> Value {
    serde_json::from_str(&read(&dir.join(format!("{sub}.manifest.json")))).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_writes_one_row_deterministically() {
    let t = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "simulate",
            "--k",
            "4",
            "--n",
            "3",
            "--m",
            "10",
            "--p",
            "0.001",
            "--pe",
            "0.001",
            "--seed",
            "7",
            "--measure",
            "2000",
            "--out",
            out,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let a = t.path().join("a");
    let b = t.path().join("b");
    for d in [&a, &b] {
        let out = qtn(&args(d.to_str().unwrap()).iter().map(String::as_str).collect::<Vec<_>>());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv = read(&a.join("simulate.csv"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("seed,p,b,N,success_rate"));
    assert!(rows[1].starts_with("7,0.001,1,64,"));
    assert!(csv.ends_with('\n'));
    assert!(csv.contains("# manifest: simulate.manifest.json"));
    assert_eq!(csv, read(&b.join("simulate.csv")));
    let m = manifest(&a, "simulate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["k"], 4);
    assert_eq!(m["outputs"][0], "simulate.csv");
    assert_eq!(m["covering_table_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn exit_codes_by_failure_class() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().to_str().unwrap();
    let range = qtn(&["simulate", "--k", "4", "--n", "3", "--p", "2.0", "--out", out]);
    assert_eq!(range.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&range.stderr).contains("[0, 1]"));

    let missing = qtn(&["simulate", "--k", "4", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));

    assert_eq!(qtn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qtn(&["mesh", "--reps", "many"]).status.code(), Some(2));

    let cfg = t.path().join("bad.json");
    std::fs::write(&cfg, r#"{"k": 4, "colour": "blue"}"#).unwrap();
    let unknown = qtn(&["overhead", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(unknown.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("colour"));

    let nofile = qtn(&["overhead", "--config", "/nonexistent/cfg.json", "--out", out]);
    assert_eq!(nofile.status.code(), Some(4));

    assert_eq!(qtn(&["deploy", "--k", "3", "--mode", "sq", "--out", out]).status.code(), Some(3));
    assert_eq!(qtn(&["overhead", "--epsilon", "0.02", "--out", out]).status.code(), Some(3));
}

#[test]
fn flags_override_file_override_defaults() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("c.json");
    std::fs::write(&cfg, r#"{"k": 8, "family": "surface", "N_range": "8^2:8^4"}"#).unwrap();
    let out = t.path().join("o");
    let r = qtn(&["overhead", "--config", cfg.to_str().unwrap(), "--family", "css", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let m = manifest(&out, "overhead");
    assert_eq!(m["config"]["k"], 8);
    assert_eq!(m["config"]["family"], "css");
    assert_eq!(m["config"]["r"], 1);
    assert_eq!(data_rows(&read(&out.join("overhead.csv"))).len(), 4);
}

#[test]
fn manifest_reruns_byte_identically() {
    let t = tempfile::tempdir().unwrap();
    let first = t.path().join("first");
    let r = qtn(&[
        "overhead",
        "--k",
        "4",
        "--mode",
        "2d",
        "--family",
        "css",
        "--r",
        "1",
        "--N-range",
        "4^3:4^10",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let m1 = manifest(&first, "overhead");
    let second = t.path().join("second");
    let path = first.join("overhead.manifest.json");
    let r = qtn(&["overhead", "--config", path.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(manifest(&second, "overhead")["config"], m1["config"]);
    let a = read(&first.join("overhead.csv"));
    assert_eq!(a, read(&second.join("overhead.csv")));
    // eight sizes from 4^3 to 4^10
    assert_eq!(data_rows(&a).len(), 9);

    let wrong = qtn(&["mesh", "--config", path.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(3));
}

#[test]
fn mesh_outputs_and_plots() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("m");
    let r = qtn(&[
        "mesh",
        "--ne",
        "40,80,160",
        "--reps",
        "5",
        "--grid",
        "4",
        "--seed",
        "3",
        "--svg",
        "--jobs",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(data_rows(&read(&out.join("mesh_instances.csv"))).len(), 16);
    let grid = read(&out.join("mesh_grid_4.txt"));
    let rows = data_rows(&grid);
    assert_eq!(rows.len(), 4);
    let total: f64 = rows.iter().flat_map(|l| l.split_whitespace()).map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    for f in ["mesh_total.svg", "mesh_center.svg"] {
        assert!(read(&out.join(f)).starts_with("<svg"));
    }
    let outputs = manifest(&out, "mesh")["outputs"].as_array().unwrap().len();
    assert_eq!(outputs, 6);
}

#[test]
fn sweep_and_dynamic_small() {
    let t = tempfile::tempdir().unwrap();
    let s = t.path().join("s");
    let r = qtn(&[
        "sweep",
        "--N",
        "16",
        "--p",
        "0.001,0.01,0.1",
        "--min-reps",
        "2",
        "--max-reps",
        "3",
        "--warmup",
        "100",
        "--measure",
        "500",
        "--out",
        s.to_str().unwrap(),
        "--svg",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(data_rows(&read(&s.join("sweep.csv"))).len(), 4);
    assert!(read(&s.join("sweep_thresholds.csv")).contains("16,1,0.95,"));
    assert!(read(&s.join("sweep_success.svg")).starts_with("<svg"));

    let d = t.path().join("d");
    let r = qtn(&[
        "dynamic",
        "--n",
        "2",
        "--steps",
        "0:0.001,2000:0.01",
        "--cycles",
        "4000",
        "--ensemble",
        "3",
        "--bin",
        "100",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(data_rows(&read(&d.join("dynamic.csv"))).len(), 41);
    assert_eq!(data_rows(&read(&d.join("dynamic_transitions.csv"))).len(), 4);
    assert_eq!(manifest(&d, "dynamic")["config"]["steps"][1][0], 2000);
}

#[test]
fn deploy_preset() {
    let t = tempfile::tempdir().unwrap();
    let r = qtn(&["deploy", "--preset", "fig4d", "--out", t.path().to_str().unwrap()]);
    assert!(r.status.success());
    // 1 + 4 + 16 + 64 nodes
    assert_eq!(data_rows(&read(&t.path().join("deploy.csv"))).len(), 86);
    assert_eq!(qtn(&["deploy", "--preset", "fig9", "--out", t.path().to_str().unwrap()]).status.code(), Some(2));
}
