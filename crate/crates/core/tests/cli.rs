use std::path::Path;
use std::process::{Command, Output};

fn ultradiff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultradiff"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn meta(path: &Path, key: &str) -> String {
    let prefix = format!("# {key} ");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
        .unwrap_or_else(|| panic!("no {key} in {}", path.display()))
}

#[test]
fn solve_format_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = ultradiff(&["solve"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert!(text.starts_with("# ultradiff "));
    assert!(text.contains("# config_sha256 "));
    assert!(text.contains("# seed 42"));
    let lines = data_lines(&dir.path().join("solve.csv"));
    assert_eq!(lines[0], "t,k,f_point,f_sphere_mass,terms_used,residual_bound");
    // 21 grid points (1e-2..1e3 at 4 per decade) times spheres 0..=4.
    assert_eq!(lines.len(), 1 + 21 * 5);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first.len(), 6);
    assert_eq!(first[0], "1.0000000000000000e-2");
    let f: f64 = first[2].parse().unwrap();
    assert!(f > 0.99 && f < 1.0);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ultradiff(&["validate"], dir.path()).status.code(), Some(0));
    let alt = write_config(
        dir.path(),
        "alt.json",
        r#"{"scenario": {"type": "perturbed", "p": 2, "xi": 1.0, "alpha": 1.3862943611198906,
            "delta": [0.3, -0.3], "extend": "cycle"}}"#,
    );
    assert_eq!(ultradiff(&["validate", "--config", &alt], dir.path()).status.code(), Some(0));
    assert_eq!(
        ultradiff(&["validate", "--require-limit", "--config", &alt], dir.path()).status.code(),
        Some(1)
    );
    let bad = write_config(dir.path(), "bad.json", "{");
    assert_eq!(ultradiff(&["validate", "--config", &bad], dir.path()).status.code(), Some(2));
    assert_eq!(ultradiff(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert_eq!(ultradiff(&["sink"], d).status.code(), Some(0));
        assert_eq!(ultradiff(&["mc", "--walkers", "2000"], d).status.code(), Some(0));
    }
    for f in ["poles.csv", "survival.csv", "mc.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let c = tempfile::tempdir().unwrap();
    ultradiff(&["mc", "--walkers", "2000", "--seed", "7"], c.path());
    assert_ne!(data_lines(&a.path().join("mc.csv")), data_lines(&c.path().join("mc.csv")));
}

#[test]
fn asym_theorem3_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let out = ultradiff(&["asym", "--theorem", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("asym_theorem3.csv");
    let lines = data_lines(&path);
    assert_eq!(lines[0], "t,y,beta_hat,u=y*t^beta,modulation_formula,ratio");
    let beta_hat: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((beta_hat - 0.5).abs() <= 0.01, "{beta_hat}");
    let beta: f64 = meta(&path, "beta").parse().unwrap();
    assert_eq!(beta, 0.5);
}

#[test]
fn asym_hypothesis_guard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "guard.json", r#"{"alpha": 0.6931471805599453}"#);
    let out = ultradiff(&["asym", "--theorem", "4", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("requires alpha*xi > theta"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn oracle_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ultradiff(&["oracle-check", "--depth", "8", "--sink"], dir.path()).status.code(), Some(0));
    let max: f64 = meta(&dir.path().join("oracle_check.csv"), "max_abs_diff").parse().unwrap();
    assert!(max <= 1e-8);
    let rows = data_lines(&dir.path().join("oracle_check.csv"));
    assert_eq!(rows.len(), 1 + 4 * 10);
    assert_eq!(
        ultradiff(&["oracle-check", "--depth", "4", "--max-diff", "1e-300"], dir.path()).status.code(),
        Some(1)
    );
}

#[test]
fn explicit_trees_and_perturbed_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write_config(
        dir.path(),
        "tree.json",
        r#"{"scenario": {"type": "tree", "alpha": 1.0, "branching": [[[], [], []], [[], []]], "level_distance": [1.0, 2.0]}}"#,
    );
    assert_eq!(ultradiff(&["oracle-check", "--config", &tree], dir.path()).status.code(), Some(0));
    let rows = data_lines(&dir.path().join("oracle_check.csv"));
    assert_eq!(rows.len(), 1 + 4 * 3);
    assert_eq!(ultradiff(&["spectrum", "--config", &tree], dir.path()).status.code(), Some(0));
    // λ_1, λ_2 and the constant mode.
    assert_eq!(data_lines(&dir.path().join("spectrum.csv")).len(), 1 + 3);

    let pert = write_config(
        dir.path(),
        "pert.json",
        r#"{"scenario": {"type": "perturbed", "p": 2, "xi": 1.0, "alpha": 1.3862943611198906, "delta": [0.2]}}"#,
    );
    assert_eq!(ultradiff(&["mc", "--config", &pert], dir.path()).status.code(), Some(2));
    assert_eq!(ultradiff(&["asym", "--theorem", "3", "--config", &pert], dir.path()).status.code(), Some(0));
}
