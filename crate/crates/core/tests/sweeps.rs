use besov_lab::harness::output::write_sweep;
use besov_lab::harness::{compare_priors, run_rate_sweep, ExperimentConfig};

const DIRECT: &str = r#"
[model]
kind = "identity"
family = "db2"
[prior]
kind = "laplace"
alpha = 2.0
[truth]
kind = "smooth_bump"
center = [0.5]
width = 0.25
amplitude = 1.0
[sweep]
eps_max = 0.125
n_eps = 5
replicates = 20
seed = 9
"#;

#[test]
fn sweep_output_is_bit_identical_across_runs() {
    let cfg = ExperimentConfig::from_toml_str(DIRECT).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_sweep(a.path(), &run_rate_sweep(&cfg).unwrap()).unwrap();
    write_sweep(b.path(), &run_rate_sweep(&cfg).unwrap()).unwrap();
    for name in ["rates.csv", "fits.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn different_seed_changes_records() {
    let a = run_rate_sweep(&ExperimentConfig::from_toml_str(DIRECT).unwrap()).unwrap();
    let b = run_rate_sweep(
        &ExperimentConfig::from_toml_str(&DIRECT.replace("seed = 9", "seed = 10")).unwrap(),
    )
    .unwrap();
    assert_ne!(a.records[0].err_pred, b.records[0].err_pred);
}

#[test]
fn smooth_truth_shows_no_large_prior_gap() {
    let text = DIRECT
        .replace("family = \"db2\"", "family = \"haar\"")
        .replace("alpha = 2.0", "alpha = 1.0")
        .replace("n_eps = 5", "n_eps = 7");
    let report = compare_priors(&ExperimentConfig::from_toml_str(&text).unwrap()).unwrap();
    assert!(report.gap.abs() < 0.08, "gap {}", report.gap);
}

#[test]
fn doubling_replicates_moves_slope_within_its_se() {
    let text = DIRECT.replace("n_eps = 5", "n_eps = 7");
    let base = run_rate_sweep(&ExperimentConfig::from_toml_str(&text).unwrap()).unwrap();
    let doubled = run_rate_sweep(
        &ExperimentConfig::from_toml_str(&text.replace("replicates = 20", "replicates = 40"))
            .unwrap(),
    )
    .unwrap();
    for (a, b) in base.fits.iter().zip(&doubled.fits) {
        assert_eq!(a.quantity, b.quantity);
        assert!(
            (a.slope - b.slope).abs() < a.se.max(b.se),
            "{}: {} vs {} (se {}, {})",
            a.quantity,
            a.slope,
            b.slope,
            a.se,
            b.se
        );
    }
}
