use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn atlas(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resonance-atlas"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn summary(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(out).join("summary.json")).unwrap())
        .unwrap()
}

const TWO_POINTS: &str = r#"{"input":{"centers":[[0,0,0],[1,0,0]],"strengths":[[0,0],[0,0]]}}"#;
const LASSO: &str =
    r#"{"input":{"vertices":[0],"edges":[{"u":0,"v":0,"length":1.0}],"leads":[{"v":0}]}}"#;

#[test]
fn two_point_diagram() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", TWO_POINTS);
    let out = atlas(
        &[
            "analyze-points",
            "--config",
            &cfg,
            "--tasks",
            "diagram",
            "--out-dir",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path(), "o");
    assert_eq!(s["diagram"]["M"], 1);
    assert_eq!(s["diagram"]["mu"], serde_json::json!([1.0]));
    assert_eq!(s["diagram"]["r"], serde_json::json!([2]));
    assert_eq!(s["tolerances"]["root_tol"], 1e-9);
    assert!(s["search"].as_array().unwrap().is_empty());
}

#[test]
fn lasso_structure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.json", LASSO);
    let out = atlas(
        &[
            "analyze-graph",
            "--config",
            &cfg,
            "--tasks",
            "structure",
            "--out-dir",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path(), "o");
    let st = &s["structure"];
    assert!((st["beta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let xi: Vec<f64> = st["xi"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x[0].as_f64().unwrap())
        .collect();
    assert_eq!(xi.len(), 2);
    assert!((xi[0] - 1.0).abs() < 1e-9 && (xi[1] - 3.0).abs() < 1e-9);
    assert_eq!(st["embedded"], true);
}

#[test]
fn lasso_lattice_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.json", LASSO);
    let out = atlas(
        &[
            "analyze-graph",
            "--config",
            &cfg,
            "--tasks",
            "resonances",
            "--lattice",
            "--rect",
            "0.5,20,-2,0.5",
            "--out-dir",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("o/resonances.csv")).unwrap();
    assert!(csv.starts_with("re,im,multiplicity\n"));
    assert!(csv.lines().count() > 5);
    assert!(dir.path().join("o/lattice.csv").exists());
    let s = summary(dir.path(), "o");
    assert!(s["resonances"][0]["lattice_distance"].as_f64().unwrap() < 1e-8);
}

#[test]
fn malformed_json_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"input":{"centers":[[0,0,0],[1,"a",0]],"strengths":[[0,0],[0,0]]}}"#,
    );
    let out = atlas(&["analyze-points", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("input.centers[1][1]"), "{err}");

    let cfg = write(dir.path(), "trunc.json", r#"{"input":{"centers":"#);
    let out = atlas(&["analyze-points", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let cfg = write(
        dir.path(),
        "dup.json",
        r#"{"input":{"centers":[[0,0,0],[0,0,0]],"strengths":[[0,0],[0,0]]}}"#,
    );
    let out = atlas(&["analyze-points", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input.centers[1]"));
}

#[test]
fn incommensurable_lattice_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.json",
        r#"{"input":{"vertices":[0,1,2],"edges":[{"u":0,"v":1,"length":1.0},{"u":0,"v":2,"length":1.4142135623730951}],
            "leads":[{"v":0}]},"tasks":["structure"],"lattice":true}"#,
    );
    let out = atlas(
        &["analyze-graph", "--config", &cfg, "--out-dir", "o"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        summary(dir.path(), "o")["structure"]["commensurable"],
        false
    );
}

#[test]
fn borderline_coefficients_breach_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", TWO_POINTS);
    let out = atlas(
        &[
            "analyze-points",
            "--config",
            &cfg,
            "--tol-coeff",
            "0.5",
            "--out-dir",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(!summary(dir.path(), "o")["breaches"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn bad_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", TWO_POINTS);
    let out = Command::new(env!("CARGO_BIN_EXE_resonance-atlas"))
        .args(["analyze-points", "--config", &cfg])
        .env("RESONANCE_ATLAS_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"input":{"centers":[[0,0,0],[1,0,0]],"strengths":[[0,0],[0,0]]},
            "tasks":["diagram","structure","resonances","density","chains"],
            "search":[{"x0":0.0,"x1":40.0,"y0":-6.0,"y1":1.0}]}"#,
    );
    let files = [
        "summary.json",
        "resonances.csv",
        "density.csv",
        "chains.csv",
    ];
    let mut runs = Vec::new();
    for (out, threads) in [("a", "1"), ("b", "4")] {
        let o = Command::new(env!("CARGO_BIN_EXE_resonance-atlas"))
            .args(["analyze-points", "--config", &cfg, "--out-dir", out])
            .env("RESONANCE_ATLAS_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        runs.push(files.map(|f| std::fs::read(dir.path().join(out).join(f)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    let s = summary(dir.path(), "a");
    assert_eq!(s["density"]["mirrored"], true);
    let ratio = s["density"]["weyl_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.15, "{ratio}");
    assert_eq!(s["structure"]["r_narrow"], 2);
}

#[test]
fn crystal_slab_and_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"input":{"breakpoints":[0,1],"permittivities":[1,4,1]},"tasks":["structure","resonances"]}"#,
    );
    let out = atlas(
        &[
            "analyze-crystal",
            "--config",
            &cfg,
            "--rect",
            "0.3,10,-2,0.5",
            "--lattice",
            "--out-dir",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path(), "o");
    assert_eq!(s["structure"]["no_real_resonances"], true);
    assert!((s["structure"]["beta"].as_f64().unwrap() - 4.0).abs() < 1e-12);

    let cfg = write(
        dir.path(),
        "u.json",
        r#"{"input":{"breakpoints":[0,1],"permittivities":[1,1,1]},"tasks":["resonances"]}"#,
    );
    let out = atlas(
        &[
            "analyze-crystal",
            "--config",
            &cfg,
            "--rect",
            "0.3,10,-2,0.5",
            "--out-dir",
            "u",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read_to_string(dir.path().join("u/resonances.csv")).unwrap(),
        "re,im,multiplicity\n"
    );
}

#[test]
fn validate_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.json",
        r#"{"input":{"vertices":[0],"edges":[],"leads":[{"v":0},{"v":0}],"coupling":{"0":[[0.0,1.001],[1.0,0.0]]}}}"#,
    );
    let out = atlas(
        &["validate", "--kind", "graph", "--config", &cfg],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let d: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(d[0]["field"], "input.coupling.0");
    assert_eq!(d[0]["level"], "error");

    let cfg = write(dir.path(), "ok.json", LASSO);
    let out = atlas(
        &["validate", "--kind", "graph", "--config", &cfg],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
}
