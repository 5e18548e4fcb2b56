//! Paired comparison of the Laplace MAP estimator with the best-tuned
//! Gaussian linear estimator on the same observations.

use rand::Rng;
use serde::Serialize;

use super::config::{EstimatorKind, ExperimentConfig, ModelName};
use super::exponents::{theoretical_exponents, to_f64, ExponentModel};
use super::sweep::{best_rho, fit, median, ols, Plan, RateFit, RateRecord, TaskOut};
use crate::error::{Error, Result};
use crate::prior::PriorKind;
use crate::seeding;

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub laplace: RateFit,
    pub gaussian: RateFit,
    /// `slope(Laplace) − slope(Gaussian)` for the prediction error.
    pub gap: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `minimax − linear` exponent when defined.
    pub target_gap: Option<f64>,
    /// Oracle `ρ` per noise level.
    pub rho: Vec<f64>,
    pub records: Vec<RateRecord>,
}

fn gaussian_medians(rows: &[Vec<TaskOut>], picks: &[Vec<usize>], n_rho: usize) -> Vec<f64> {
    rows.iter()
        .zip(picks)
        .map(|(row, pick)| {
            (0..n_rho)
                .map(|k| {
                    median(
                        &pick
                            .iter()
                            .map(|&r| row[r].gaussian.as_ref().unwrap()[k].0)
                            .collect::<Vec<_>>(),
                    )
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn map_medians(rows: &[Vec<TaskOut>], picks: &[Vec<usize>]) -> Vec<f64> {
    rows.iter()
        .zip(picks)
        .map(|(row, pick)| {
            median(
                &pick
                    .iter()
                    .map(|&r| row[r].map.unwrap().0)
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

/// Runs both estimators on identical data and bootstraps the slope gap by
/// resampling replicates within each noise level.
pub fn compare_priors(cfg: &ExperimentConfig) -> Result<CompareReport> {
    if cfg.model.kind != ModelName::Identity {
        return Err(Error::Config(
            "prior comparison needs the identity model".into(),
        ));
    }
    if cfg.sweep.estimator != EstimatorKind::Map {
        return Err(Error::Config(
            "prior comparison runs MAP against the Gaussian estimator; set estimator = \"map\""
                .into(),
        ));
    }
    let plan = Plan::new(cfg)?;
    let rows = plan.run_all(true, true)?;
    let grid = cfg.gaussian.rho_grid();
    let reps = cfg.sweep.replicates;
    let all: Vec<Vec<usize>> = vec![(0..reps).collect(); plan.eps.len()];

    let mut records = Vec::new();
    let mut rho = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let (k, r_star) = best_rho(row, &grid);
        rho.push(r_star);
        for (r, t) in row.iter().enumerate() {
            let m = t.map.unwrap();
            records.push(plan.record(
                EstimatorKind::Map.tag(),
                cfg.prior.kind.tag(),
                i,
                r,
                m.2,
                (m.0, m.1),
                t.seconds,
            ));
        }
        for (r, t) in row.iter().enumerate() {
            let g = t.gaussian.as_ref().unwrap()[k];
            records.push(plan.record(
                EstimatorKind::GaussianLinear.tag(),
                PriorKind::GaussianSobolev.tag(),
                i,
                r,
                r_star,
                g,
                t.seconds,
            ));
        }
    }

    let (exp_map, _, src_map) = plan.theory(EstimatorKind::Map);
    let (exp_lin, _, src_lin) = plan.theory(EstimatorKind::GaussianLinear);
    let laplace = fit(
        EstimatorKind::Map.tag(),
        "pred",
        &plan.eps,
        &map_medians(&rows, &all),
        exp_map,
        &src_map,
    );
    let gaussian = fit(
        EstimatorKind::GaussianLinear.tag(),
        "pred",
        &plan.eps,
        &gaussian_medians(&rows, &all, grid.len()),
        exp_lin,
        &src_lin,
    );
    let gap = laplace.slope - gaussian.slope;

    let log_eps: Vec<f64> = plan.eps.iter().map(|e| e.ln()).collect();
    let slope = |meds: Vec<f64>| {
        ols(&log_eps
            .iter()
            .cloned()
            .zip(meds.into_iter().map(f64::ln))
            .collect::<Vec<_>>())
        .0
    };
    let mut rng = seeding::stream_rng(cfg.sweep.seed, 0xb007);
    let mut gaps: Vec<f64> = (0..cfg.compare.bootstrap)
        .map(|_| {
            let picks: Vec<Vec<usize>> = (0..plan.eps.len())
                .map(|_| (0..reps).map(|_| rng.random_range(0..reps)).collect())
                .collect();
            slope(map_medians(&rows, &picks)) - slope(gaussian_medians(&rows, &picks, grid.len()))
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let q = |p: f64| gaps[((gaps.len() - 1) as f64 * p).round() as usize];
    let (ci_low, ci_high) = if gaps.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (q(0.025), q(0.975))
    };

    let target_gap = match (cfg.prior.alpha.fract() == 0.0, cfg.model.dim) {
        (true, 1) => theoretical_exponents(ExponentModel::Direct, cfg.prior.alpha as i64, 1)
            .ok()
            .and_then(|e| Some(to_f64(e.minimax?) - to_f64(e.linear?))),
        _ => None,
    };
    Ok(CompareReport {
        laplace,
        gaussian,
        gap,
        ci_low,
        ci_high,
        target_gap,
        rho,
        records,
    })
}
