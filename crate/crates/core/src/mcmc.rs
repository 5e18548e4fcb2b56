//! Posterior sampling by preconditioned Crank–Nicolson in Gaussian coordinates.
//!
//! The chain moves `z ~ N(0, I)` and maps to coefficients by
//! `c = ρ 2^{(d/2-α)k} T(z)`. For the Laplace prior `T` is the inverse-CDF
//! transport from the standard normal to the standard Laplace law; for the
//! Gaussian prior `T` is the identity. pCN is reversible for the reference
//! measure, so the acceptance ratio is the likelihood ratio alone.
//!
//! The cutoff `χ` is applied by the forward model, so the prior's own cutoff
//! field is not used here.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{invalid, Result};
use crate::forward::ForwardModel;
use crate::observation::Observation;
use crate::prior::{PriorKind, PriorSpec};
use crate::seeding;
use crate::wavelet::CoefficientTree;

const TARGET_ACCEPTANCE: f64 = 0.25;
const ADAPT_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total iterations including burn-in.
    pub n_samples: usize,
    pub burn_in: usize,
    pub beta: f64,
    #[serde(default = "one")]
    pub thinning: usize,
    pub seed: u64,
    /// Starting coefficients; the prior median (zero) when absent.
    #[serde(default)]
    pub init: Option<CoefficientTree>,
    #[serde(default = "yes")]
    pub adapt: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ChainConfig {
    pub fn new(n_samples: usize, burn_in: usize, beta: f64, seed: u64) -> Self {
        Self {
            n_samples,
            burn_in,
            beta,
            thinning: 1,
            seed,
            init: None,
            adapt: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid(format!(
                "pCN step must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.n_samples <= self.burn_in {
            return Err(invalid("n_samples must exceed burn_in"));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainOutput {
    /// Post burn-in, thinned coefficient samples.
    pub samples: Vec<CoefficientTree>,
    /// Log-likelihood of each stored sample.
    pub log_likelihoods: Vec<f64>,
    /// Iteration index of each stored sample.
    pub iterations: Vec<usize>,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    pub beta: f64,
    /// Set when the post burn-in acceptance rate is below 1%.
    pub degenerate: bool,
}

/// Standard normal to standard Laplace by matching CDFs.
pub fn normal_to_laplace(z: f64) -> f64 {
    z.signum() * -erfc(z.abs() / std::f64::consts::SQRT_2).ln()
}

pub fn laplace_to_normal(x: f64) -> f64 {
    x.signum() * std::f64::consts::SQRT_2 * erfc_inv((-x.abs()).exp())
}

struct Transport {
    kind: PriorKind,
    scales: Vec<f64>,
}

impl Transport {
    fn coefficients(&self, prior: &PriorSpec, z: &[f64]) -> CoefficientTree {
        let data = z
            .iter()
            .zip(&self.scales)
            .map(|(&z, &s)| match self.kind {
                PriorKind::LaplaceBesov => s * normal_to_laplace(z),
                PriorKind::GaussianSobolev => s * z,
            })
            .collect();
        CoefficientTree::from_vec(&prior.basis, data).expect("scales match basis")
    }

    fn latent(&self, c: &CoefficientTree) -> Result<Vec<f64>> {
        c.as_slice()
            .iter()
            .zip(&self.scales)
            .map(|(&c, &s)| {
                if s == 0.0 {
                    return if c == 0.0 {
                        Ok(0.0)
                    } else {
                        Err(invalid("initial value outside prior support"))
                    };
                }
                Ok(match self.kind {
                    PriorKind::LaplaceBesov => laplace_to_normal(c / s),
                    PriorKind::GaussianSobolev => c / s,
                })
            })
            .collect()
    }
}

pub fn run_chain(
    obs: &Observation,
    model: &ForwardModel,
    prior: &PriorSpec,
    cfg: &ChainConfig,
) -> Result<ChainOutput> {
    cfg.validate()?;
    prior.validate()?;
    obs.y.check_basis(&prior.basis)?;
    let transport = Transport {
        kind: prior.kind,
        scales: prior.coefficient_scales(),
    };
    let mut z = match &cfg.init {
        Some(c) => transport.latent(c)?,
        None => vec![0.0; prior.basis.size()],
    };
    let mut c = transport.coefficients(prior, &z);
    let mut ll = obs.log_likelihood(model, &c)?;

    let mut rng = seeding::stream_rng(cfg.seed, 0);
    let mut beta = cfg.beta;
    let mut window_accepts = 0usize;
    let (mut accepts, mut proposals) = (0usize, 0usize);
    let mut out = ChainOutput {
        samples: Vec::new(),
        log_likelihoods: Vec::new(),
        iterations: Vec::new(),
        acceptance_rate: 0.0,
        beta,
        degenerate: false,
    };

    for it in 0..cfg.n_samples {
        let keep = (1.0 - beta * beta).sqrt();
        let proposal: Vec<f64> = z
            .iter()
            .map(|&zi| keep * zi + beta * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let c_new = transport.coefficients(prior, &proposal);
        // Inadmissible proposals (domain errors) are rejected.
        let ll_new = obs
            .log_likelihood(model, &c_new)
            .unwrap_or(f64::NEG_INFINITY);
        let u: f64 = rng.random();
        let accepted = u.ln() < ll_new - ll;
        if accepted {
            z = proposal;
            c = c_new;
            ll = ll_new;
        }

        if it < cfg.burn_in {
            window_accepts += accepted as usize;
            if cfg.adapt && (it + 1) % ADAPT_WINDOW == 0 {
                let rate = window_accepts as f64 / ADAPT_WINDOW as f64;
                beta = (beta * ((rate - TARGET_ACCEPTANCE) * 2.0).exp()).clamp(1e-5, 1.0);
                window_accepts = 0;
            }
            continue;
        }
        proposals += 1;
        accepts += accepted as usize;
        if (it - cfg.burn_in).is_multiple_of(cfg.thinning) {
            out.samples.push(c.clone());
            out.log_likelihoods.push(ll);
            out.iterations.push(it);
        }
    }
    out.acceptance_rate = accepts as f64 / proposals.max(1) as f64;
    out.beta = beta;
    out.degenerate = out.acceptance_rate < 0.01;
    if out.degenerate {
        log::warn!("pCN acceptance rate {:.4} below 1%", out.acceptance_rate);
    }
    Ok(out)
}

/// Posterior functionals of one stored sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleSummary {
    pub iteration: usize,
    pub log_likelihood: f64,
    /// `‖G(F) − G(F₀)‖`.
    pub pred_dist: f64,
    /// `‖f − f₀‖` with `f = Φ∘χ·F`.
    pub param_dist: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionStat {
    pub pred_fraction: f64,
    pub param_fraction: f64,
}

impl ChainOutput {
    pub fn summaries(
        &self,
        model: &ForwardModel,
        reference: &CoefficientTree,
    ) -> Result<Vec<SampleSummary>> {
        let g0 = model.evaluate(reference)?;
        let f0 = model.coefficient_field(reference)?;
        self.samples
            .iter()
            .zip(&self.log_likelihoods)
            .zip(&self.iterations)
            .map(|((c, &ll), &it)| {
                Ok(SampleSummary {
                    iteration: it,
                    log_likelihood: ll,
                    pred_dist: model.evaluate(c)?.sub(&g0).l2_norm(),
                    param_dist: model.coefficient_field(c)?.sub(&f0).l2_norm(),
                })
            })
            .collect()
    }

    /// Sample mean of the stored coefficients.
    pub fn mean(&self) -> Option<CoefficientTree> {
        let first = self.samples.first()?;
        let sum = self.samples[1..]
            .iter()
            .fold(first.clone(), |acc, c| acc.add(c));
        Some(sum.scaled(1.0 / self.samples.len() as f64))
    }

    /// Batch-means estimate of the mean and its Monte Carlo standard error
    /// for the scalar functional `f`.
    pub fn functional_mean(&self, f: impl Fn(&CoefficientTree) -> f64) -> (f64, f64) {
        let series: Vec<f64> = self.samples.iter().map(f).collect();
        batch_means(&series)
    }

    /// ESS of the distance functionals to `reference`.
    pub fn ess(&self, model: &ForwardModel, reference: &CoefficientTree) -> Result<(f64, f64)> {
        let s = self.summaries(model, reference)?;
        let pred: Vec<f64> = s.iter().map(|v| v.pred_dist).collect();
        let param: Vec<f64> = s.iter().map(|v| v.param_dist).collect();
        Ok((effective_sample_size(&pred), effective_sample_size(&param)))
    }

    pub fn write_summary_csv<W: Write>(
        &self,
        model: &ForwardModel,
        reference: &CoefficientTree,
        out: W,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in self.summaries(model, reference)? {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fractions of stored samples with `‖G(F)−G(F₀)‖ ≥ r` and `‖f−f₀‖ ≥ r`.
pub fn posterior_contraction_stat(
    chain: &ChainOutput,
    reference: &CoefficientTree,
    model: &ForwardModel,
    radius: f64,
) -> Result<ContractionStat> {
    let s = chain.summaries(model, reference)?;
    let n = s.len().max(1) as f64;
    Ok(ContractionStat {
        pred_fraction: s.iter().filter(|v| v.pred_dist >= radius).count() as f64 / n,
        param_fraction: s.iter().filter(|v| v.param_dist >= radius).count() as f64 / n,
    })
}

/// Mean and batch-means standard error with `⌊√n⌋` batches.
pub fn batch_means(series: &[f64]) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let batches = ((n as f64).sqrt() as usize).max(2).min(n);
    let size = n / batches;
    if size == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// `n · var / (batch size · var of batch means)`.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let (mean, se) = batch_means(series);
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if se > 0.0 {
        (var / (se * se)).min(n)
    } else {
        n
    }
}
