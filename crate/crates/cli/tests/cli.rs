use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_deltavar"));
    cmd.env_remove("DELTAVAR_OUT_DIR");
    cmd
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, json).unwrap();
    p
}

fn build(config: &Path, out: &Path) -> PathBuf {
    let o = run(&["build", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stem = config.file_stem().unwrap().to_str().unwrap();
    out.join(format!("{stem}.bundle.json"))
}

#[test]
fn build_then_verify_round_trips() {
    let dir = TempDir::new().unwrap();
    for name in ["hz.json", "qscale.json", "literal.json", "minimal.json"] {
        let bundle = build(&sample(name), dir.path());
        let o = run(&["verify", bundle.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("result: PASS"));
    }
}

#[test]
fn integer_grid_profile_alternates() {
    let dir = TempDir::new().unwrap();
    build(&sample("hz.json"), dir.path());
    let csv = fs::read_to_string(dir.path().join("hz.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,sigma,mu,offsetQ,Rprofile"));
    let r: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(r, ["1.0", "0.0", "1.0", "0.0", ""]);
}

#[test]
fn nonpositive_p_is_a_validation_error() {
    let o = run(&["build", sample("bad_p.json").to_str().unwrap(), "--out-dir", "/nonexistent-never-written"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("p(t) > 0"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("grid.json", r#"{"timescale": {"kind": "uniform", "a": 0, "b": 1, "h": 0.3}, "ingredients": {"P": "0", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 1}}"#, "multiple of h"),
        ("arity.json", r#"{"timescale": {"kind": "uniform", "a": 0, "b": 3, "h": 1}, "ingredients": {"P": "v", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 1}}"#, "P may not depend on v"),
        ("syntax.json", r#"{"timescale": {"kind": "uniform", "a": 0, "b": 3, "h": 1}, "ingredients": {"P": "2*(x", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 1}}"#, "ingredient P"),
        ("unknown.json", r#"{"timescale": {"kind": "uniform", "a": 0, "b": 3, "h": 1}, "ingredients": {"P": "0", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 1}, "extra": 1}"#, "extra"),
        ("two_points.json", r#"{"timescale": {"kind": "explicit", "points": [0, 1]}, "ingredients": {"P": "0", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 1}}"#, "three points"),
    ];
    for (name, json, needle) in cases {
        let p = write_config(&dir, name, json);
        let o = run(&["build", p.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let o = run(&["build", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn hand_written_lagrangian_fails_verification() {
    let dir = TempDir::new().unwrap();
    let o = run(&["verify", sample("handwritten.json").to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert!(stdout(&o).contains("result: FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("handwritten.report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert_eq!(report["report"]["el_residual"], serde_json::json!([0.0, 1.0, 2.0]));
}

#[test]
fn three_point_grid_is_a_minimal_run() {
    let dir = TempDir::new().unwrap();
    let bundle = build(&sample("minimal.json"), dir.path());
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    assert_eq!(b["points"].as_array().unwrap().len(), 3);
    assert_eq!(b["Rprofile"].as_array().unwrap().len(), 2);
}

#[test]
fn literal_general_prints_both_forms() {
    let dir = TempDir::new().unwrap();
    let cfg = sample("qscale.json");
    let o = run(&["verify", cfg.to_str().unwrap(), "--literal-general", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("g_shift(t)") && text.contains("g_literal(t)"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("qscale.report.json")).unwrap()).unwrap();
    assert!(report["literal"]["el_constancy"].as_f64().unwrap() > 0.0);

    // The flag on `build` stores the literal offset, and `verify` of the bundle reports it.
    let bundle = dir.path().join("qscale.bundle.json");
    let o = run(&["build", cfg.to_str().unwrap(), "--literal-general", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["verify", bundle.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(stdout(&o).contains("g_literal(t)"));
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let bundle = build(&sample("qscale.json"), dir.path());
        let o = run(&["verify", bundle.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    for file in ["qscale.bundle.json", "qscale.csv", "qscale.report.json"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .env("DELTAVAR_OUT_DIR", dir.path())
        .args(["build", sample("hz.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("hz.bundle.json").exists());
}

fn write_traj(dir: &TempDir, name: &str, rows: &[(f64, f64)]) -> PathBuf {
    let mut s = String::from("t,y\n");
    for (t, y) in rows {
        s.push_str(&format!("{t:?},{y:?}\n"));
    }
    write_config(dir, name, &s)
}

fn eval(bundle: &Path, traj: &Path) -> Output {
    run(&["eval", bundle.to_str().unwrap(), traj.to_str().unwrap()])
}

#[test]
fn eval_at_the_extremal_integrates_the_potential() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "pot.json",
        r#"{"timescale": {"kind": "uniform", "a": 0, "b": 2, "h": 0.5},
            "ingredients": {"P": "t^2 + x", "p": "1", "q": "x*t", "w": "v^2", "C": 0.3, "R0": 1}}"#,
    );
    let bundle = build(&cfg, dir.path());
    let traj = write_traj(&dir, "zero.csv", &[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.5, 0.0), (2.0, 0.0)]);
    let o = eval(&bundle, &traj);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Σ μ P(t,0) = 0.5 (0 + 0.25 + 1 + 2.25)
    let value: f64 = stdout(&o).trim().parse().unwrap();
    assert!((value - 1.75).abs() < 1e-14);
    assert_eq!(stdout(&o).trim(), "1.75000000000000e0");
}

#[test]
fn eval_of_unit_lagrangian_is_interval_length() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "one.json",
        r#"{"timescale": {"kind": "qpow", "q": 2, "kmin": 0, "kmax": 3},
            "ingredients": {"P": "1", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 0}}"#,
    );
    let bundle = build(&cfg, dir.path());
    let traj = write_traj(&dir, "zero.csv", &[(8.0, 0.0), (1.0, 0.0), (2.0, 0.0), (4.0, 0.0)]);
    let o = eval(&bundle, &traj);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "7.00000000000000e0");
}

#[test]
fn eval_errors() {
    let dir = TempDir::new().unwrap();
    let bundle = build(&sample("hz.json"), dir.path());
    let missing = write_traj(&dir, "missing.csv", &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (4.0, 0.0)]);
    let o = eval(&bundle, &missing);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("t = 3"), "{}", stderr(&o));
    let off_grid = write_traj(&dir, "off.csv", &[(0.0, 0.0), (1.0, 0.0), (2.5, 0.0), (3.0, 0.0), (4.0, 0.0)]);
    assert_eq!(code(&eval(&bundle, &off_grid)), 2);
    let boundary = write_traj(&dir, "bnd.csv", &[(0.0, 1.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
    assert_eq!(code(&eval(&bundle, &boundary)), 4);
}

#[test]
fn eval_of_perturbed_trajectory_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let bundle = build(&sample("hz.json"), dir.path());
    let traj = write_traj(&dir, "p.csv", &[(0.0, 0.0), (1.0, 0.5), (2.0, -0.25), (3.0, 0.125), (4.0, 0.0)]);
    let first = stdout(&eval(&bundle, &traj));
    assert_eq!(first, stdout(&eval(&bundle, &traj)));
    assert!(first.trim().parse::<f64>().unwrap().is_finite());
}

#[test]
fn table_lists_every_point() {
    let o = run(&["table", sample("qscale.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,t,sigma,rho,mu,r,s,e_r,offsetQ,Rprofile"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    // e_r(t_k, a) = (-2)^k on the q = 2 scale.
    assert_eq!(rows[2][7], "4.0");
    assert_eq!(rows[5][5], "");
}
