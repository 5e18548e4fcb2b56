//! Rate sweeps over a geometric grid of noise levels.
//!
//! Every `(ε index, replicate)` pair is an independent task with its own
//! random stream, so results do not depend on scheduling.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{EstimatorKind, ExperimentConfig};
use super::exponents::{theoretical_exponents, to_f64, ExponentModel};
use super::truth::make_truth;
use crate::error::{Error, Result};
use crate::estimators::{gaussian_posterior_mean, solve_map_multistart, PlsConfig};
use crate::forward::ForwardModel;
use crate::mcmc::{run_chain, ChainConfig};
use crate::observation::Observation;
use crate::prior::{sample_prior_uncut, PriorKind, PriorSpec};
use crate::seeding;
use crate::wavelet::{dwt_forward, CoefficientTree};

/// One row of the rate CSV.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RateRecord {
    pub model: String,
    pub prior: String,
    pub estimator: String,
    pub alpha: f64,
    pub d: usize,
    pub eps: f64,
    pub replicate: usize,
    #[serde(rename = "J")]
    pub level: u32,
    /// `λ` for MAP; the tuned prior scale `ρ` for the Gaussian estimator.
    pub lambda: f64,
    pub err_pred: f64,
    pub err_param: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RateFit {
    pub estimator: String,
    /// `pred` for `‖G(F̂)−G(F₀)‖`, `param` for `‖f̂−f₀‖`.
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
    pub theoretical: Option<f64>,
    pub exponent_source: String,
    /// `(ln ε, ln median error)` pairs the fit was computed from.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub records: Vec<RateRecord>,
    pub fits: Vec<RateFit>,
    /// Resolution used per noise level.
    pub levels: Vec<(f64, u32)>,
}

/// Least-squares line through `(x, y)`: `(slope, intercept, se of slope)`.
pub fn ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = if points.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, intercept, se)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `δ_ε = ε^{(2κ+2α)/(2κ+2α+d)}`.
pub fn delta_eps(eps: f64, alpha: f64, kappa: f64, d: usize) -> f64 {
    eps.powf((2.0 * kappa + 2.0 * alpha) / (2.0 * kappa + 2.0 * alpha + d as f64))
}

/// Everything that depends only on the resolution level.
pub(crate) struct LevelData {
    pub model: ForwardModel,
    pub truth: CoefficientTree,
    /// Analysis of `G(F₀)`.
    pub signal: CoefficientTree,
    pub g0: crate::grid::GridFunction,
    pub f0: crate::grid::GridFunction,
}

impl LevelData {
    pub fn new(cfg: &ExperimentConfig, level: u32) -> Result<Self> {
        let model = cfg.forward_model(level)?;
        let cutoff = cfg.cutoff().unwrap_or_default();
        let truth = make_truth(&cfg.truth, &model.basis, cfg.prior.alpha, &cutoff)
            .map_err(|e| Error::Config(e.to_string()))?
            .coefficients;
        let eval = model.evaluate_full(&truth)?;
        let signal = dwt_forward(&eval.output, &model.basis)?;
        Ok(Self {
            model,
            truth,
            signal,
            g0: eval.output,
            f0: eval.coefficient,
        })
    }

    pub fn errors(&self, estimate: &CoefficientTree) -> Result<(f64, f64)> {
        let eval = self.model.evaluate_full(estimate)?;
        Ok((
            eval.output.sub(&self.g0).l2_norm(),
            eval.coefficient.sub(&self.f0).l2_norm(),
        ))
    }
}

/// Smallest admissible level with discretization bias `‖R u_{J+1} − u_J‖ ≤ δ_ε/10`.
pub(crate) fn choose_level(
    cfg: &ExperimentConfig,
    eps: f64,
    delta: f64,
    cache: &mut BTreeMap<u32, LevelData>,
) -> Result<u32> {
    let j_max = cfg.j_max();
    // Resolution where thresholding of a κ-smoothed signal stops mattering;
    // the bias check below refines it for discretization error.
    let d = cfg.model.dim as f64;
    let kappa = cfg.model_kind().kappa();
    let wanted = ((1.0 / (delta * delta)).log2() * d / (d + 2.0 * kappa))
        .ceil()
        .max(0.0) as u32;
    let mut level = wanted.clamp(cfg.sweep.j_min, j_max);
    if !cfg.sweep.bias_check {
        return Ok(level);
    }
    loop {
        for j in [level, level + 1] {
            if let Entry::Vacant(slot) = cache.entry(j) {
                slot.insert(LevelData::new(cfg, j).map_err(|e| {
                    Error::Config(format!(
                        "eps = {eps}: cannot build level {j} for the bias check: {e}"
                    ))
                })?);
            }
        }
        let fine = cache[&(level + 1)].g0.restrict()?;
        let bias = fine.sub(&cache[&level].g0).l2_norm();
        if bias <= 0.1 * delta {
            return Ok(level);
        }
        if level >= j_max {
            return Err(Error::Config(format!(
                "eps = {eps}: discretization bias {bias:.3e} exceeds delta/10 = {:.3e} at j_max = {j_max}",
                0.1 * delta
            )));
        }
        level += 1;
    }
}

/// Resolution level for a single noise level, as chosen by a sweep.
pub fn level_for(cfg: &ExperimentConfig, eps: f64) -> Result<u32> {
    let delta = delta_eps(
        eps,
        cfg.prior.alpha,
        cfg.model_kind().kappa(),
        cfg.model.dim,
    );
    choose_level(cfg, eps, delta, &mut BTreeMap::new())
}

/// Per-task estimator output.
pub(crate) struct TaskOut {
    pub map: Option<(f64, f64, f64)>,
    /// Errors for every `ρ` of the grid.
    pub gaussian: Option<Vec<(f64, f64)>>,
    pub seconds: f64,
}

pub(crate) struct Plan<'a> {
    pub cfg: &'a ExperimentConfig,
    pub eps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub levels: Vec<u32>,
    pub data: BTreeMap<u32, LevelData>,
}

impl<'a> Plan<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let eps = cfg.eps_grid();
        let kappa = cfg.model_kind().kappa();
        let d = cfg.model.dim;
        let deltas: Vec<f64> = eps
            .iter()
            .map(|&e| delta_eps(e, cfg.prior.alpha, kappa, d))
            .collect();
        let mut data = BTreeMap::new();
        let mut levels = Vec::with_capacity(eps.len());
        for (&e, &delta) in eps.iter().zip(&deltas) {
            levels.push(choose_level(cfg, e, delta, &mut data)?);
        }
        for &j in &levels {
            if let Entry::Vacant(slot) = data.entry(j) {
                slot.insert(LevelData::new(cfg, j)?);
            }
        }
        Ok(Self {
            cfg,
            eps,
            deltas,
            levels,
            data,
        })
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.cfg.sweep.lambda_constant * self.deltas[i] * self.deltas[i]
    }

    pub fn observation(&self, i: usize, replicate: usize) -> Observation {
        let data = &self.data[&self.levels[i]];
        let stream = seeding::stream_id(&[i as u64, replicate as u64]);
        Observation::from_signal(
            data.signal.clone(),
            self.eps[i],
            self.cfg.sweep.seed,
            stream,
            data.model.basis,
        )
    }

    fn map_estimate(&self, i: usize, replicate: usize, obs: &Observation) -> Result<(f64, f64)> {
        let cfg = self.cfg;
        let data = &self.data[&self.levels[i]];
        let basis = data.model.basis;
        let mut pls = PlsConfig::new(self.lambda(i), cfg.prior.alpha);
        pls.max_iters = cfg.map.max_iters;
        pls.tol = cfg.map.tol;
        pls.restarts = cfg.map.restarts;
        let mut inits = vec![CoefficientTree::zeros(&basis)];
        if cfg.map.restarts > 1 {
            let rho = (self.eps[i] / self.deltas[i]).powi(2);
            let spec = PriorSpec {
                kind: PriorKind::LaplaceBesov,
                alpha: cfg.prior.alpha,
                rho,
                cutoff: None,
                basis,
            };
            let mut rng = seeding::stream_rng(
                cfg.sweep.seed ^ 0x1ee7,
                seeding::stream_id(&[i as u64, replicate as u64]),
            );
            let draw = sample_prior_uncut(&spec, &mut rng);
            inits.push(draw.clone());
            if cfg.map.restarts > 2 {
                inits.push(data.truth.add(&draw));
            }
        }
        let report = solve_map_multistart(obs, &data.model, &pls, &inits)?;
        if !report.converged {
            log::warn!(
                "MAP did not converge at eps = {}, replicate {replicate}",
                self.eps[i]
            );
        }
        data.errors(&report.estimate)
    }

    fn gaussian_errors(&self, i: usize, obs: &Observation) -> Result<Vec<(f64, f64)>> {
        let data = &self.data[&self.levels[i]];
        let alpha = self.cfg.gaussian.alpha.unwrap_or(self.cfg.prior.alpha);
        self.cfg
            .gaussian
            .rho_grid()
            .into_iter()
            .map(|rho| {
                let prior = PriorSpec::new(
                    PriorKind::GaussianSobolev,
                    alpha,
                    rho,
                    None,
                    data.model.basis,
                )
                .map_err(|e| Error::Config(e.to_string()))?;
                data.errors(&gaussian_posterior_mean(obs, &data.model, &prior)?)
            })
            .collect()
    }

    fn posterior_mean(&self, i: usize, replicate: usize, obs: &Observation) -> Result<(f64, f64)> {
        let data = &self.data[&self.levels[i]];
        let rho = (self.eps[i] / self.deltas[i]).powi(2);
        let prior = PriorSpec::new(
            self.cfg.prior.kind,
            self.cfg.prior.alpha,
            rho,
            None,
            data.model.basis,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let c = &self.cfg.chain;
        let seed = self.cfg.sweep.seed ^ seeding::stream_id(&[i as u64, replicate as u64, 1]);
        let chain = run_chain(
            obs,
            &data.model,
            &prior,
            &ChainConfig::new(c.n_samples, c.burn_in, c.beta, seed),
        )?;
        data.errors(&chain.mean().expect("chain stores samples"))
    }

    pub fn run_task(
        &self,
        i: usize,
        replicate: usize,
        map: bool,
        gaussian: bool,
    ) -> Result<TaskOut> {
        let start = Instant::now();
        let obs = self.observation(i, replicate);
        let map_out = if map {
            let (p, q) = if self.cfg.sweep.estimator == EstimatorKind::PosteriorMean {
                self.posterior_mean(i, replicate, &obs)?
            } else {
                self.map_estimate(i, replicate, &obs)?
            };
            Some((p, q, self.lambda(i)))
        } else {
            None
        };
        let gaussian = if gaussian {
            Some(self.gaussian_errors(i, &obs)?)
        } else {
            None
        };
        let seconds = if self.cfg.sweep.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        Ok(TaskOut {
            map: map_out,
            gaussian,
            seconds,
        })
    }

    /// Runs all `(ε, replicate)` tasks in parallel; results are indexed `[i][r]`.
    pub fn run_all(&self, map: bool, gaussian: bool) -> Result<Vec<Vec<TaskOut>>> {
        let reps = self.cfg.sweep.replicates;
        let flat: Vec<Result<TaskOut>> = (0..self.eps.len() * reps)
            .into_par_iter()
            .map(|t| self.run_task(t / reps, t % reps, map, gaussian))
            .collect();
        let mut out: Vec<Vec<TaskOut>> = (0..self.eps.len())
            .map(|_| Vec::with_capacity(reps))
            .collect();
        for (t, r) in flat.into_iter().enumerate() {
            out[t / reps].push(r?);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &self,
        estimator: &str,
        prior: &str,
        i: usize,
        r: usize,
        lambda: f64,
        errs: (f64, f64),
        seconds: f64,
    ) -> RateRecord {
        RateRecord {
            model: self.cfg.model_kind().tag().to_string(),
            prior: prior.to_string(),
            estimator: estimator.to_string(),
            alpha: self.cfg.prior.alpha,
            d: self.cfg.model.dim,
            eps: self.eps[i],
            replicate: r,
            level: self.levels[i],
            lambda,
            err_pred: errs.0,
            err_param: errs.1,
            seconds,
        }
    }

    pub fn exponent_model(&self) -> Option<ExponentModel> {
        self.cfg.exponent_model()
    }

    /// Theoretical exponents for `(pred, param)` of the given estimator.
    pub fn theory(&self, estimator: EstimatorKind) -> (Option<f64>, Option<f64>, String) {
        let alpha = self.cfg.prior.alpha;
        let Some(model) = self.exponent_model() else {
            return (None, None, "none".into());
        };
        if alpha.fract() != 0.0 {
            return (None, None, "none".into());
        }
        let Ok(e) = theoretical_exponents(model, alpha as i64, self.cfg.model.dim as i64) else {
            return (None, None, "none".into());
        };
        match (estimator, model) {
            (EstimatorKind::GaussianLinear, _) => {
                (e.linear.map(to_f64), e.linear.map(to_f64), "linear".into())
            }
            (_, ExponentModel::Direct) => {
                (Some(to_f64(e.delta)), Some(to_f64(e.delta)), "delta".into())
            }
            (_, ExponentModel::Smoothing { .. }) => (Some(to_f64(e.delta)), None, "delta".into()),
            _ => (
                Some(to_f64(e.delta)),
                e.theta.map(|t| to_f64(t) * to_f64(e.delta)),
                "delta; theta*delta".into(),
            ),
        }
    }
}

pub(crate) fn fit(
    estimator: &str,
    quantity: &str,
    eps: &[f64],
    medians: &[f64],
    theory: Option<f64>,
    source: &str,
) -> RateFit {
    let points: Vec<(f64, f64)> = eps
        .iter()
        .zip(medians)
        .map(|(e, m)| (e.ln(), m.ln()))
        .collect();
    let (slope, intercept, se) = ols(&points);
    RateFit {
        estimator: estimator.into(),
        quantity: quantity.into(),
        slope,
        intercept,
        se,
        theoretical: theory,
        exponent_source: source.into(),
        points,
    }
}

/// Runs the configured estimator over the noise grid and fits log–log slopes
/// of the median errors.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let plan = Plan::new(cfg)?;
    let estimator = cfg.sweep.estimator;
    let gaussian = estimator == EstimatorKind::GaussianLinear;
    let results = plan.run_all(!gaussian, gaussian)?;
    let prior_tag = if gaussian {
        PriorKind::GaussianSobolev.tag()
    } else {
        cfg.prior.kind.tag()
    };
    let mut records = Vec::new();
    let mut med_pred = Vec::new();
    let mut med_param = Vec::new();
    for (i, row) in results.iter().enumerate() {
        let (chosen, lambda) = if gaussian {
            let (k, rho) = best_rho(row, &cfg.gaussian.rho_grid());
            (
                row.iter()
                    .map(|t| t.gaussian.as_ref().unwrap()[k])
                    .collect::<Vec<_>>(),
                rho,
            )
        } else {
            (
                row.iter()
                    .map(|t| {
                        let m = t.map.unwrap();
                        (m.0, m.1)
                    })
                    .collect(),
                plan.lambda(i),
            )
        };
        for (r, (t, errs)) in row.iter().zip(&chosen).enumerate() {
            records.push(plan.record(estimator.tag(), prior_tag, i, r, lambda, *errs, t.seconds));
        }
        med_pred.push(median(&chosen.iter().map(|e| e.0).collect::<Vec<_>>()));
        med_param.push(median(&chosen.iter().map(|e| e.1).collect::<Vec<_>>()));
    }
    let (tp, tq, source) = plan.theory(estimator);
    let fits = vec![
        fit(estimator.tag(), "pred", &plan.eps, &med_pred, tp, &source),
        fit(estimator.tag(), "param", &plan.eps, &med_param, tq, &source),
    ];
    Ok(SweepResult {
        records,
        fits,
        levels: plan
            .eps
            .iter()
            .cloned()
            .zip(plan.levels.iter().cloned())
            .collect(),
    })
}

/// Grid index and value of `ρ` with the smallest median prediction error.
pub(crate) fn best_rho(row: &[TaskOut], grid: &[f64]) -> (usize, f64) {
    let medians: Vec<f64> = (0..grid.len())
        .map(|k| {
            median(
                &row.iter()
                    .map(|t| t.gaussian.as_ref().unwrap()[k].0)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let k = (0..grid.len())
        .min_by(|&a, &b| medians[a].total_cmp(&medians[b]))
        .unwrap_or(0);
    (k, grid[k])
}
