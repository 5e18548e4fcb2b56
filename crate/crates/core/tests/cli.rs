use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besov-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const DIRECT: &str = r#"
[model]
kind = "identity"
[prior]
kind = "laplace"
alpha = 2.0
[truth]
kind = "smooth_bump"
center = [0.5]
width = 0.25
amplitude = 1.0
[sweep]
eps_max = 0.05
seed = 1
"#;

#[test]
fn exponents_print_exact_fractions() {
    let out = bin(&["exponents", "--model", "darcy", "--alpha", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("10/11"), "{text}");
}

#[test]
fn simulate_then_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "direct.toml", DIRECT);
    let obs = dir.path().join("obs.csv");
    let out = bin(&[
        "simulate",
        "--config",
        &cfg,
        "--eps",
        "0.05",
        "--seed",
        "3",
        "--level",
        "6",
        "--out",
        obs.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let est = dir.path().join("est.json");
    let out = bin(&[
        "map",
        "--config",
        &cfg,
        "--obs",
        obs.to_str().unwrap(),
        "--out",
        est.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!(report["tau_sq"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        dir.path(),
        "unknown.toml",
        &DIRECT.replace("seed = 1", "seed = 1\nbogus = 2"),
    );
    assert_eq!(bin(&["rates", "--config", &unknown]).status.code(), Some(2));
    let few = write(
        dir.path(),
        "few.toml",
        &DIRECT.replace("seed = 1", "seed = 1\nreplicates = 3"),
    );
    assert_eq!(bin(&["rates", "--config", &few]).status.code(), Some(2));
    assert_eq!(
        bin(&["rates", "--config", "/nonexistent/config.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn inadmissible_coefficient_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = DIRECT
        .replace(
            "kind = \"identity\"\n[prior]",
            "kind = \"darcy\"\nlink = { kind = \"identity\" }\n[prior]",
        )
        .replace("alpha = 2.0", "alpha = 4.0");
    let cfg = write(dir.path(), "darcy.toml", &text);
    let out = bin(&[
        "simulate", "--config", &cfg, "--eps", "0.01", "--level", "5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
