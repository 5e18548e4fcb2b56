//! Besov–Laplace wavelet priors and their Gaussian counterpart.
//!
//! A draw is `ρ χ F̃` with `F̃ = Σ 2^{(d/2-α)k} ξ_kl ψ_kl`, the `ξ_kl` i.i.d.
//! standard Laplace (or standard normal for the Gaussian comparison prior).
//! Series are truncated at the basis level `J`.

mod cutoff;
mod link;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seeding;
use crate::wavelet::{dwt_forward, dwt_inverse, CoefficientTree, WaveletBasis};

pub use cutoff::CutoffSpec;
pub use link::{apply_link, apply_link_inverse, LinkFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    #[serde(alias = "laplace")]
    LaplaceBesov,
    #[serde(alias = "gaussian")]
    GaussianSobolev,
}

impl PriorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PriorKind::LaplaceBesov => "laplace",
            PriorKind::GaussianSobolev => "gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub alpha: f64,
    pub rho: f64,
    #[serde(default)]
    pub cutoff: Option<CutoffSpec>,
    pub basis: WaveletBasis,
}

impl PriorSpec {
    pub fn new(
        kind: PriorKind,
        alpha: f64,
        rho: f64,
        cutoff: Option<CutoffSpec>,
        basis: WaveletBasis,
    ) -> Result<Self> {
        let spec = Self {
            kind,
            alpha,
            rho,
            cutoff,
            basis,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Laplace requires `α > d` for the series to live in L²; the Gaussian
    /// comparison prior is only used truncated and needs `α > d/2`.
    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        let d = self.basis.dim as f64;
        let min_alpha = match self.kind {
            PriorKind::LaplaceBesov => d,
            PriorKind::GaussianSobolev => d / 2.0,
        };
        if !(self.alpha.is_finite() && self.alpha > min_alpha) {
            return Err(invalid(format!(
                "{:?} prior needs alpha > {min_alpha}, got {}",
                self.kind, self.alpha
            )));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(invalid(format!(
                "prior scale rho must be non-negative, got {}",
                self.rho
            )));
        }
        if let Some(c) = &self.cutoff {
            c.validate()?;
        }
        Ok(())
    }

    /// Level scale `2^{(d/2-α)k}` (without `ρ`).
    pub fn level_scale(&self, k: u32) -> f64 {
        2f64.powf((self.basis.dim as f64 / 2.0 - self.alpha) * k as f64)
    }

    /// Per-coefficient scale `ρ 2^{(d/2-α)k}` in flat tree order.
    pub fn coefficient_scales(&self) -> Vec<f64> {
        CoefficientTree::zeros(&self.basis).level_weights(|k| self.rho * self.level_scale(k))
    }
}

/// `(ρ, δ_ε)` with `δ_ε = ε^{(2κ+2α)/(2κ+2α+d)}` and `ρ = ε²/δ_ε²`.
pub fn rescaling(eps: f64, alpha: f64, kappa: f64, d: usize) -> Result<(f64, f64)> {
    let d = d as f64;
    if !(eps > 0.0) || !(alpha > d) || !(kappa >= 0.0) {
        return Err(invalid(format!("rescaling needs eps > 0, alpha > d, kappa >= 0 (eps={eps}, alpha={alpha}, kappa={kappa})")));
    }
    let delta = eps.powf((2.0 * kappa + 2.0 * alpha) / (2.0 * kappa + 2.0 * alpha + d));
    let rho = eps.powf(2.0 * d / (2.0 * kappa + 2.0 * alpha + d));
    Ok((rho, delta))
}

/// Standard Laplace variate as a difference of two unit exponentials.
pub fn standard_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a: f64 = rng.sample(Exp1);
    let b: f64 = rng.sample(Exp1);
    a - b
}

/// Coefficients of `ρ F̃` before the cutoff is applied.
pub fn sample_prior_uncut<R: Rng + ?Sized>(spec: &PriorSpec, rng: &mut R) -> CoefficientTree {
    let scales = spec.coefficient_scales();
    let data = scales
        .iter()
        .map(|s| {
            let xi = match spec.kind {
                PriorKind::LaplaceBesov => standard_laplace(rng),
                PriorKind::GaussianSobolev => rng.sample::<f64, _>(StandardNormal),
            };
            s * xi
        })
        .collect();
    CoefficientTree::from_vec(&spec.basis, data).expect("scales match basis size")
}

/// Multiplies the function represented by `c` by `χ` and re-analyses.
pub fn apply_cutoff(
    c: &CoefficientTree,
    cutoff: &CutoffSpec,
    basis: &WaveletBasis,
) -> Result<CoefficientTree> {
    let f = dwt_inverse(c, basis)?;
    let chi = cutoff.on_grid(basis.dim, basis.max_level);
    dwt_forward(&f.zip_map(&chi, |a, b| a * b), basis)
}

/// One draw of `ρ χ F̃`, deterministic in `seed`.
pub fn sample_prior(spec: &PriorSpec, seed: u64) -> Result<CoefficientTree> {
    spec.validate()?;
    let mut rng = seeding::stream_rng(seed, 0);
    let raw = sample_prior_uncut(spec, &mut rng);
    match &spec.cutoff {
        Some(c) => apply_cutoff(&raw, c, &spec.basis),
        None => Ok(raw),
    }
}

/// Log prior density of the coefficients up to an additive constant.
pub fn log_prior_density(c: &CoefficientTree, spec: &PriorSpec) -> Result<f64> {
    c.check_basis(&spec.basis)?;
    let scales = spec.coefficient_scales();
    let mut total = 0.0;
    for (&v, &s) in c.as_slice().iter().zip(&scales) {
        if v == 0.0 {
            continue;
        }
        if s == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += match spec.kind {
            PriorKind::LaplaceBesov => -v.abs() / s,
            PriorKind::GaussianSobolev => -0.5 * (v / s).powi(2),
        };
    }
    Ok(total)
}
