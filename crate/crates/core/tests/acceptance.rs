//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, and exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use besov_lab::estimators::{gaussian_posterior_mean, soft_threshold, solve_map, PlsConfig};
use besov_lab::forward::{ForwardModel, ModelKind};
use besov_lab::grid::GridFunction;
use besov_lab::harness::{compare_priors, run_rate_sweep, ExperimentConfig, RateFit};
use besov_lab::mcmc::{batch_means, run_chain, ChainConfig};
use besov_lab::observation::Observation;
use besov_lab::prior::{sample_prior_uncut, CutoffSpec, LinkFunction, PriorKind, PriorSpec};
use besov_lab::seeding::{stream_rng, Rng as StreamRng};
use besov_lab::wavelet::{
    dwt_forward, dwt_inverse, seq_norm, CoefficientTree, Family, SeqNorm, WaveletBasis,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Outcome = Result<Verdict, String>;

fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn normal_tree(basis: &WaveletBasis, scale: f64, rng: &mut StreamRng) -> CoefficientTree {
    let data = (0..basis.size())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    CoefficientTree::from_vec(basis, data).unwrap()
}

fn pde_link() -> LinkFunction {
    LinkFunction::RegularSoftplus { k_min: 0.1 }
}

fn wavelet_exactness() -> Outcome {
    let families = [
        Family::Haar,
        Family::Daubechies(2),
        Family::Daubechies(3),
        Family::Daubechies(4),
        Family::Daubechies(6),
    ];
    let mut rng = stream_rng(1, 0);
    let (mut worst_round, mut worst_parseval) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let family = families[i % families.len()];
        let dim = 1 + (i / families.len()) % 2;
        let level = if dim == 1 {
            rng.random_range(0..=10)
        } else {
            rng.random_range(0..=6)
        };
        let basis = WaveletBasis::new(family, dim, level).map_err(|e| e.to_string())?;
        let values = (0..basis.size())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let f = GridFunction::from_values(dim, level, values).map_err(|e| e.to_string())?;
        let c = dwt_forward(&f, &basis).map_err(|e| e.to_string())?;
        let back = dwt_inverse(&c, &basis).map_err(|e| e.to_string())?;
        let scale = f.sup_norm().max(1.0);
        worst_round = worst_round.max(back.sub(&f).sup_norm() / scale);
        let energy = f.l2_norm().powi(2);
        worst_parseval = worst_parseval.max((c.dot(&c) - energy).abs() / energy.max(1.0));
    }
    Ok(Verdict::new(
        worst_round <= 1e-10 && worst_parseval <= 1e-10,
        format!("max round-trip error {worst_round:.2e}, max Parseval defect {worst_parseval:.2e} (tol 1e-10)"),
    ))
}

fn direct_map_oracle() -> Outcome {
    let mut rng = stream_rng(2, 0);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let dim = 1 + trial % 2;
        let level = if dim == 1 { 6 } else { 3 };
        let basis = WaveletBasis::new(Family::Daubechies(2), dim, level).unwrap();
        let model = ForwardModel::identity(basis);
        let alpha = rng.random_range(dim as f64 + 0.1..4.0);
        let lambda = 10f64.powf(rng.random_range(-4.0..-1.0));
        let y = normal_tree(&basis, rng.random_range(0.05..2.0), &mut rng);
        let mut obs = Observation::from_signal(CoefficientTree::zeros(&basis), 0.1, 0, 0, basis);
        obs.y = y.clone();
        let cfg = PlsConfig::new(lambda, alpha);
        let r = solve_map(&obs, &model, &cfg, &CoefficientTree::zeros(&basis))
            .map_err(|e| e.to_string())?;
        let w = y.level_weights(|k| 2f64.powf((alpha - dim as f64 / 2.0) * k as f64));
        for ((&got, &yi), &wi) in r.estimate.as_slice().iter().zip(y.as_slice()).zip(&w) {
            worst = worst.max((got - soft_threshold(yi, lambda * wi / 2.0)).abs());
        }
    }
    Ok(Verdict::new(
        worst <= 1e-8,
        format!("max coefficient deviation {worst:.2e} over 50 problems (tol 1e-8)"),
    ))
}

fn refinement_slope(
    model_for: impl Fn(u32) -> ForwardModel,
    f: f64,
    exact: impl Fn(f64) -> f64,
) -> Result<f64, String> {
    let mut points = Vec::new();
    for level in 4..=9 {
        let model = model_for(level);
        let u = model
            .solve_pde(&GridFunction::constant(1, level, f))
            .map_err(|e| e.to_string())?
            .u;
        let err = u
            .sub(&GridFunction::from_fn(1, level, |x| exact(x[0])))
            .l2_norm();
        points.push((-(level as f64) * std::f64::consts::LN_2, err.ln()));
    }
    Ok(ols(&points).0)
}

fn pde_correctness() -> Outcome {
    let darcy = |level| {
        let basis = WaveletBasis::new(Family::Haar, 1, level).unwrap();
        ForwardModel::new(ModelKind::Darcy { source: 2.0 }, basis, pde_link(), None).unwrap()
    };
    let schroedinger = |level| {
        let basis = WaveletBasis::new(Family::Haar, 1, level).unwrap();
        ForwardModel::new(
            ModelKind::Schroedinger { boundary: 1.0 },
            basis,
            pde_link(),
            None,
        )
        .unwrap()
    };
    let darcy_slope = refinement_slope(darcy, 1.0, |x| x * x - x)?;
    let c = 3.0f64;
    let k = (2.0 * c).sqrt();
    let cosh_slope = refinement_slope(schroedinger, c, |x| {
        (k * (x - 0.5)).cosh() / (k / 2.0).cosh()
    })?;

    let mut rng = stream_rng(3, 0);
    let mut violations = 0;
    for trial in 0..200 {
        let dim = 1 + trial % 2;
        let level = if dim == 1 { 7 } else { 4 };
        let basis = WaveletBasis::new(Family::Daubechies(2), dim, level).unwrap();
        let f = dwt_inverse(&normal_tree(&basis, 0.5, &mut rng), &basis)
            .unwrap()
            .map(|x| pde_link().apply(x));
        let d =
            ForwardModel::new(ModelKind::Darcy { source: 2.0 }, basis, pde_link(), None).unwrap();
        let s = ForwardModel::new(
            ModelKind::Schroedinger { boundary: 1.0 },
            basis,
            pde_link(),
            None,
        )
        .unwrap();
        let ud = d.solve_pde(&f).map_err(|e| e.to_string())?.u;
        let us = s.solve_pde(&f).map_err(|e| e.to_string())?.u;
        if ud.values().iter().any(|&v| v > 0.0)
            || us.values().iter().any(|&v| !(v > 0.0 && v <= 1.0))
        {
            violations += 1;
        }
    }
    let pass =
        (darcy_slope - 2.0).abs() <= 0.15 && (cosh_slope - 2.0).abs() <= 0.15 && violations == 0;
    Ok(Verdict::new(
        pass,
        format!(
            "refinement slopes Darcy {darcy_slope:.3}, Schroedinger {cosh_slope:.3} (2 ± 0.15); maximum-principle violations {violations}/200"
        ),
    ))
}

fn gradient_certification() -> Outcome {
    let mut rng = stream_rng(4, 0);
    let (mut worst_fd, mut worst_dot) = (0.0f64, 0.0f64);
    for kind in [
        ModelKind::Darcy { source: 2.0 },
        ModelKind::Schroedinger { boundary: 1.0 },
    ] {
        for trial in 0..20 {
            let dim = 1 + trial % 2;
            let level = if dim == 1 { 6 } else { 3 };
            let basis = WaveletBasis::new(Family::Daubechies(2), dim, level).unwrap();
            let model =
                ForwardModel::new(kind, basis, pde_link(), Some(CutoffSpec::default())).unwrap();
            let c = normal_tree(&basis, 0.5, &mut rng);
            let v = normal_tree(&basis, 1.0, &mut rng);
            let w = dwt_inverse(&normal_tree(&basis, 1.0, &mut rng), &basis).unwrap();

            let grad = model.adjoint_gradient(&c, &w).map_err(|e| e.to_string())?;
            let adjoint = grad.dot(&v);
            let h = 1e-5;
            let plus = model
                .evaluate(&c.axpy(h, &v))
                .map_err(|e| e.to_string())?
                .inner(&w);
            let minus = model
                .evaluate(&c.axpy(-h, &v))
                .map_err(|e| e.to_string())?
                .inner(&w);
            let fd = (plus - minus) / (2.0 * h);
            worst_fd = worst_fd.max((fd - adjoint).abs() / adjoint.abs().max(1e-12));

            let tangent = model
                .linearized(&c, &v)
                .map_err(|e| e.to_string())?
                .inner(&w);
            worst_dot = worst_dot
                .max((tangent - adjoint).abs() / tangent.abs().max(adjoint.abs()).max(1e-300));
        }
    }
    Ok(Verdict::new(
        worst_fd <= 1e-5 && worst_dot <= 1e-10,
        format!("max finite-difference error {worst_fd:.2e} (tol 1e-5), max dot-product defect {worst_dot:.2e} (tol 1e-10)"),
    ))
}

fn sweep(toml: &str) -> Result<(RateFit, RateFit), String> {
    let cfg = ExperimentConfig::from_toml_str(toml).map_err(|e| e.to_string())?;
    let result = run_rate_sweep(&cfg).map_err(|e| e.to_string())?;
    let pick = |q: &str| {
        result
            .fits
            .iter()
            .find(|f| f.quantity == q)
            .cloned()
            .ok_or(format!("no {q} fit"))
    };
    Ok((pick("pred")?, pick("param")?))
}

/// Bump truths `(center, width, amplitude)`; each panel stands in for a ball of truths.
const DIRECT_PANEL: [(f64, f64, f64); 3] = [(0.5, 0.25, 2.0), (0.55, 0.22, 1.5), (0.47, 0.26, 3.0)];
const PDE_PANEL: [(f64, f64, f64); 3] = [(0.5, 0.25, 0.5), (0.55, 0.22, 0.6), (0.47, 0.26, 0.4)];

fn sweep_config(
    kind: &str,
    family: &str,
    alpha: f64,
    truth: (f64, f64, f64),
    tail: &str,
) -> String {
    let (center, width, amplitude) = truth;
    format!(
        r#"
[model]
kind = "{kind}"
family = "{family}"
[prior]
kind = "laplace"
alpha = {alpha:?}
[truth]
kind = "smooth_bump"
center = [{center:?}]
width = {width:?}
amplitude = {amplitude:?}
[sweep]
n_eps = 7
replicates = 20
seed = 1
{tail}"#
    )
}

fn direct_config(truth: (f64, f64, f64)) -> String {
    sweep_config("identity", "db4", 2.0, truth, "eps_max = 0.125\n")
}

fn pde_config(kind: &str, truth: (f64, f64, f64)) -> String {
    let tail =
        "eps_max = 0.0009765625\nj_max = 11\nlambda_constant = 0.01\n[map]\nmax_iters = 3000\n";
    sweep_config(kind, "db6", 4.0, truth, tail)
}

fn slopes(fits: &[RateFit]) -> String {
    fits.iter()
        .map(|f| format!("{:.3}", f.slope))
        .collect::<Vec<_>>()
        .join(", ")
}

fn direct_rate() -> Outcome {
    let fits = DIRECT_PANEL
        .iter()
        .map(|&t| sweep(&direct_config(t)).map(|r| r.0))
        .collect::<Result<Vec<_>, _>>()?;
    let target = 0.8;
    Ok(Verdict::new(
        fits.iter().all(|f| (f.slope - target).abs() <= 0.10),
        format!(
            "Laplace MAP slopes [{}] over 3 truths (target {target:.3} ± 0.10)",
            slopes(&fits)
        ),
    ))
}

const BLOCKS_COMPARE: &str = r#"
[model]
kind = "identity"
family = "haar"
[prior]
kind = "laplace"
alpha = 1.0
[truth]
kind = "piecewise_blocks"
blocks = [
  { lo = [0.23], hi = [0.37], height = 1.0 },
  { lo = [0.37], hi = [0.52], height = -0.6 },
  { lo = [0.61], hi = [0.77], height = 0.8 },
]
[sweep]
eps_max = 0.125
n_eps = 7
replicates = 20
seed = 1
[compare]
bootstrap = 1000
"#;

fn prior_gap() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str(BLOCKS_COMPARE).map_err(|e| e.to_string())?;
    let r = compare_priors(&cfg).map_err(|e| e.to_string())?;
    let target = r.target_gap.unwrap_or(1.0 / 6.0);
    let pass = r.gap >= 0.08 && r.ci_low > 0.0 && (r.gap - target).abs() <= 0.07;
    Ok(Verdict::new(
        pass,
        format!(
            "Laplace {:.3}, Gaussian {:.3}, gap {:.3} with 95% CI [{:.3}, {:.3}] (need ≥ 0.08, CI > 0, within {target:.3} ± 0.07)",
            r.laplace.slope, r.gaussian.slope, r.gap, r.ci_low, r.ci_high
        ),
    ))
}

fn pde_rates(schroedinger_param: &mut Vec<RateFit>) -> Outcome {
    let mut darcy = Vec::new();
    let mut schr = Vec::new();
    for &t in &PDE_PANEL {
        darcy.push(sweep(&pde_config("darcy", t))?.0);
        let (pred, param) = sweep(&pde_config("schroedinger", t))?;
        schr.push(pred);
        schroedinger_param.push(param);
    }
    let ok = |f: &RateFit| f.theoretical.is_some_and(|t| (f.slope - t).abs() <= 0.15);
    let target = |f: &[RateFit]| f[0].theoretical.unwrap_or(f64::NAN);
    Ok(Verdict::new(
        darcy.iter().chain(&schr).all(ok),
        format!(
            "Darcy [{}] (target {:.3} ± 0.15), Schroedinger [{}] (target {:.3} ± 0.15) over 3 truths",
            slopes(&darcy),
            target(&darcy),
            slopes(&schr),
            target(&schr)
        ),
    ))
}

fn parameter_exponent(fits: &[RateFit]) -> Outcome {
    if fits.is_empty() {
        return Err("Schroedinger sweeps did not run".into());
    }
    let bound = fits[0].theoretical.ok_or("no parameter exponent")? - 0.15;
    Ok(Verdict::new(
        fits.iter().all(|f| f.slope >= bound),
        format!(
            "Schroedinger ‖f̂ − f₀‖ slopes [{}] (need ≥ {bound:.3})",
            slopes(fits)
        ),
    ))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn mcmc_oracles() -> Outcome {
    // Conjugate Gaussian posterior.
    let basis = WaveletBasis::new(Family::Daubechies(2), 1, 4).unwrap();
    let model = ForwardModel::identity(basis);
    let prior = PriorSpec::new(PriorKind::GaussianSobolev, 1.5, 1.0, None, basis)
        .map_err(|e| e.to_string())?;
    let mut rng = stream_rng(5, 0);
    let truth = sample_prior_uncut(&prior, &mut rng);
    let obs = Observation::simulate(&model, &truth, 0.3, 5).map_err(|e| e.to_string())?;
    let exact = gaussian_posterior_mean(&obs, &model, &prior).map_err(|e| e.to_string())?;
    let chain = run_chain(
        &obs,
        &model,
        &prior,
        &ChainConfig::new(200_000, 20_000, 0.2, 11),
    )
    .map_err(|e| e.to_string())?;
    let mut conj_worst = 0.0f64;
    for i in 0..10 {
        let series: Vec<f64> = chain.samples.iter().map(|s| s.as_slice()[i]).collect();
        let (mean, se) = batch_means(&series);
        conj_worst = conj_worst.max((mean - exact.as_slice()[i]).abs() / se);
    }

    // Single Laplace coefficient against quadrature of the exact density.
    let basis0 = WaveletBasis::new(Family::Haar, 1, 0).unwrap();
    let model0 = ForwardModel::identity(basis0);
    let (eps, s, y) = (0.5, 0.8, 0.6);
    let prior0 =
        PriorSpec::new(PriorKind::LaplaceBesov, 2.0, s, None, basis0).map_err(|e| e.to_string())?;
    let mut obs0 = Observation::from_signal(CoefficientTree::zeros(&basis0), eps, 0, 0, basis0);
    obs0.y = CoefficientTree::from_vec(&basis0, vec![y]).unwrap();
    let log_density = |c: f64| (2.0 * y * c - c * c) / (2.0 * eps * eps) - c.abs() / s;
    let peak = log_density(y.signum() * (y.abs() - eps * eps / s).max(0.0));
    let density = |c: f64| (log_density(c) - peak).exp();
    let z = simpson(density, -10.0, 10.0, 20_000);
    let quad_mean = simpson(|c| c * density(c), -10.0, 10.0, 20_000) / z;
    let chain0 = run_chain(
        &obs0,
        &model0,
        &prior0,
        &ChainConfig::new(200_000, 20_000, 0.5, 12),
    )
    .map_err(|e| e.to_string())?;
    let series0: Vec<f64> = chain0.samples.iter().map(|t| t.as_slice()[0]).collect();
    let (mc_mean, mc_se) = batch_means(&series0);
    let quad_z = (mc_mean - quad_mean).abs() / mc_se;

    // Zero likelihood: the chain must leave the Laplace prior invariant.
    let flat_obs = Observation::from_signal(CoefficientTree::zeros(&basis), 1e12, 0, 0, basis);
    let laplace = PriorSpec::new(PriorKind::LaplaceBesov, 2.0, 1.0, None, basis)
        .map_err(|e| e.to_string())?;
    let mut cfg = ChainConfig::new(200_000, 1_000, 0.5, 13);
    cfg.adapt = false;
    let flat = run_chain(&flat_obs, &model, &laplace, &cfg).map_err(|e| e.to_string())?;
    let scales = laplace.coefficient_scales();
    let mut rev_worst = 0.0f64;
    for (i, &scale) in scales.iter().enumerate().take(4) {
        let abs: Vec<f64> = flat
            .samples
            .iter()
            .map(|t| t.as_slice()[i].abs() / scale)
            .collect();
        let (mean_abs, se_abs) = batch_means(&abs);
        let raw: Vec<f64> = flat
            .samples
            .iter()
            .map(|t| t.as_slice()[i] / scale)
            .collect();
        let (mean, se) = batch_means(&raw);
        rev_worst = rev_worst
            .max((mean_abs - 1.0).abs() / se_abs)
            .max(mean.abs() / se);
    }

    let pass =
        conj_worst <= 3.0 && quad_z <= 3.0 && rev_worst <= 3.0 && flat.acceptance_rate > 0.99;
    Ok(Verdict::new(
        pass,
        format!(
            "conjugate max {conj_worst:.2} SE; quadrature {quad_z:.2} SE (mean {mc_mean:.4} vs {quad_mean:.4}); \
             zero-likelihood acceptance {:.4}, prior moments max {rev_worst:.2} SE (tol 3 SE)",
            flat.acceptance_rate
        ),
    ))
}

fn prior_laws() -> Outcome {
    let (alpha, d) = (2.0, 1usize);
    let critical = alpha - d as f64;
    let draws = 1000;
    let mean_norm = |b: f64, level: u32, seed: u64| -> Result<f64, String> {
        let basis = WaveletBasis::new(Family::Daubechies(2), d, level).unwrap();
        let spec = PriorSpec::new(PriorKind::LaplaceBesov, alpha, 1.0, None, basis)
            .map_err(|e| e.to_string())?;
        let mut rng = stream_rng(seed, level as u64);
        let mut total = 0.0;
        for _ in 0..draws {
            let c = sample_prior_uncut(&spec, &mut rng);
            total += seq_norm(
                &c,
                SeqNorm::Besov {
                    s: b,
                    p: 1.0,
                    q: 1.0,
                },
            )
            .map_err(|e| e.to_string())?;
        }
        Ok(total / draws as f64)
    };
    // Growth per added level between J = 6 and J = 12.
    let growth =
        |b: f64| -> Result<f64, String> { Ok((mean_norm(b, 12, 6)? - mean_norm(b, 6, 6)?) / 6.0) };
    let below = growth(critical - 0.5)?;
    let at = growth(critical)?;

    let basis = WaveletBasis::new(Family::Daubechies(2), d, 8).unwrap();
    let spec = PriorSpec::new(PriorKind::LaplaceBesov, alpha, 1.0, None, basis)
        .map_err(|e| e.to_string())?;
    let mut rng = stream_rng(7, 0);
    let mut sups: Vec<f64> = (0..10_000)
        .map(|_| dwt_inverse(&sample_prior_uncut(&spec, &mut rng), &basis).map(|f| f.sup_norm()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    sups.sort_by(f64::total_cmp);
    let n = sups.len();
    // Upper quartile, dropping the last points where the survival count is tiny.
    let points: Vec<(f64, f64)> = (3 * n / 4..n - 20)
        .map(|i| (sups[i], ((n - i) as f64 / n as f64).ln()))
        .collect();
    let (slope, _) = ols(&points);

    let pass = below < 0.1 && at > 0.8 && slope < 0.0;
    Ok(Verdict::new(
        pass,
        format!(
            "B^b_11 growth per level: {below:.3} at b = {:.1} (< 0.1), {at:.3} at b = {critical:.1} (> 0.8); \
             sup-norm log-survival slope {slope:.3} (< 0)",
            critical - 0.5
        ),
    ))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} {name}: {detail} [{secs:.1} s]",
            if pass { "PASS" } else { "FAIL" }
        );
    };
    let mut schroedinger_param = Vec::new();
    report(1, "wavelet exactness", &mut wavelet_exactness);
    report(2, "direct MAP oracle", &mut direct_map_oracle);
    report(3, "PDE correctness", &mut pde_correctness);
    report(4, "gradient and adjoint", &mut gradient_certification);
    report(5, "direct-model rate", &mut direct_rate);
    report(6, "Gaussian vs Laplace gap", &mut prior_gap);
    report(7, "PDE rates", &mut || pde_rates(&mut schroedinger_param));
    report(8, "parameter exponent", &mut || {
        parameter_exponent(&schroedinger_param)
    });
    report(9, "MCMC oracles", &mut mcmc_oracles);
    report(10, "prior laws", &mut prior_laws);
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
