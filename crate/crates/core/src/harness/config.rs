//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [model]
//! kind = "darcy"            # identity | smoothing | darcy | schroedinger
//! family = "db6"            # haar (default) | db2 .. db6
//! dim = 1
//!
//! [prior]
//! kind = "laplace"          # laplace | gaussian
//! alpha = 4.0
//!
//! [truth]
//! kind = "smooth_bump"
//! center = [0.5]
//! width = 0.25
//! amplitude = 1.0
//!
//! [sweep]
//! eps_max = 0.125           # or an explicit `eps = [...]`
//! n_eps = 7
//! replicates = 20
//! seed = 1
//! ```
//!
//! See the README for every key and its default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::exponents::ExponentModel;
use super::truth::TruthSpec;
use crate::error::{Error, Result};
use crate::forward::{
    ForwardModel, ModelKind, DEFAULT_DARCY_SOURCE, DEFAULT_SCHROEDINGER_BOUNDARY,
};
use crate::prior::{CutoffSpec, LinkFunction, PriorKind};
use crate::wavelet::{Family, WaveletBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Identity,
    Smoothing,
    Darcy,
    Schroedinger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelName,
    /// Smoothing degree of the `smoothing` model.
    pub kappa: Option<f64>,
    /// Darcy source, default 2.
    pub source: Option<f64>,
    /// Schrödinger boundary value, default 1.
    pub boundary: Option<f64>,
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Defaults to the identity link for linear models and a regular
    /// softplus link with `k_min = 0.1` for PDE models.
    pub link: Option<LinkFunction>,
    /// Defaults to on for PDE models and off otherwise.
    pub cutoff: Option<bool>,
}

fn default_family() -> String {
    "haar".into()
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Penalized least squares with `λ = C δ_ε²`.
    #[default]
    Map,
    /// Conjugate Gaussian posterior mean, oracle-tuned over a `ρ` grid.
    GaussianLinear,
    /// pCN posterior mean.
    PosteriorMean,
}

impl EstimatorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EstimatorKind::Map => "map",
            EstimatorKind::GaussianLinear => "gaussian-linear",
            EstimatorKind::PosteriorMean => "posterior-mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Explicit noise levels. Overrides `eps_max` / `n_eps`.
    pub eps: Option<Vec<f64>>,
    /// Largest noise level of a geometric grid with ratio 1/2.
    pub eps_max: Option<f64>,
    #[serde(default = "default_n_eps")]
    pub n_eps: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Smallest and largest admissible resolution level.
    #[serde(default = "default_j_min")]
    pub j_min: u32,
    pub j_max: Option<u32>,
    #[serde(default)]
    pub estimator: EstimatorKind,
    /// `λ = C δ_ε²`.
    #[serde(default = "default_lambda_constant")]
    pub lambda_constant: f64,
    /// Compare resolutions `J` and `J + 1` and refine until the
    /// discretization bias is below `δ_ε / 10`.
    #[serde(default = "yes")]
    pub bias_check: bool,
    /// Record wall time per task (makes CSV output run dependent).
    #[serde(default)]
    pub timing: bool,
}

fn default_n_eps() -> usize {
    7
}

fn default_replicates() -> usize {
    20
}

fn default_j_min() -> u32 {
    4
}

fn default_lambda_constant() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSettings {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Zero start, then a prior draw, then a perturbed truth.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_max_iters() -> usize {
    5000
}

fn default_tol() -> f64 {
    1e-9
}

fn default_restarts() -> usize {
    1
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            tol: default_tol(),
            restarts: default_restarts(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSettings {
    /// Smoothness of the Gaussian prior; defaults to the prior's `alpha`.
    pub alpha: Option<f64>,
    #[serde(default = "default_rho_min")]
    pub rho_min: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    /// Grid points per factor of two in `ρ`.
    #[serde(default = "default_rho_per_octave")]
    pub rho_per_octave: usize,
}

fn default_rho_min() -> f64 {
    1e-3
}

fn default_rho_max() -> f64 {
    1e2
}

fn default_rho_per_octave() -> usize {
    4
}

impl Default for GaussianSettings {
    fn default() -> Self {
        Self {
            alpha: None,
            rho_min: default_rho_min(),
            rho_max: default_rho_max(),
            rho_per_octave: default_rho_per_octave(),
        }
    }
}

impl GaussianSettings {
    pub fn rho_grid(&self) -> Vec<f64> {
        let steps =
            ((self.rho_max / self.rho_min).log2() * self.rho_per_octave as f64).ceil() as usize;
        (0..=steps)
            .map(|i| self.rho_min * 2f64.powf(i as f64 / self.rho_per_octave as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSettings {
    #[serde(default = "default_chain_len")]
    pub n_samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_chain_len() -> usize {
    20_000
}

fn default_burn_in() -> usize {
    5_000
}

fn default_beta() -> f64 {
    0.2
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            n_samples: default_chain_len(),
            burn_in: default_burn_in(),
            beta: default_beta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub prior: PriorConfig,
    pub truth: TruthSpec,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub map: MapSettings,
    #[serde(default)]
    pub gaussian: GaussianSettings,
    #[serde(default)]
    pub chain: ChainSettings,
    #[serde(default)]
    pub compare: CompareSettings,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSettings {
    /// Bootstrap resamples for the slope-gap interval.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_bootstrap() -> usize {
    1000
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            bootstrap: default_bootstrap(),
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn family(&self) -> Result<Family> {
        self.model
            .family
            .parse()
            .map_err(|e: Error| config_err(e.to_string()))
    }

    pub fn model_kind(&self) -> ModelKind {
        match self.model.kind {
            ModelName::Identity => ModelKind::Identity,
            ModelName::Smoothing => ModelKind::LinearSmoothing {
                kappa: self.model.kappa.unwrap_or(1.0),
            },
            ModelName::Darcy => ModelKind::Darcy {
                source: self.model.source.unwrap_or(DEFAULT_DARCY_SOURCE),
            },
            ModelName::Schroedinger => ModelKind::Schroedinger {
                boundary: self.model.boundary.unwrap_or(DEFAULT_SCHROEDINGER_BOUNDARY),
            },
        }
    }

    pub fn is_pde(&self) -> bool {
        matches!(self.model.kind, ModelName::Darcy | ModelName::Schroedinger)
    }

    pub fn link(&self) -> LinkFunction {
        self.model.link.unwrap_or(if self.is_pde() {
            LinkFunction::RegularSoftplus { k_min: 0.1 }
        } else {
            LinkFunction::Identity
        })
    }

    pub fn cutoff(&self) -> Option<CutoffSpec> {
        self.model
            .cutoff
            .unwrap_or(self.is_pde())
            .then(CutoffSpec::default)
    }

    pub fn basis(&self, level: u32) -> Result<WaveletBasis> {
        WaveletBasis::new(self.family()?, self.model.dim, level)
            .map_err(|e| config_err(e.to_string()))
    }

    pub fn forward_model(&self, level: u32) -> Result<ForwardModel> {
        ForwardModel::new(
            self.model_kind(),
            self.basis(level)?,
            self.link(),
            self.cutoff(),
        )
        .map_err(|e| config_err(e.to_string()))
    }

    pub fn exponent_model(&self) -> Option<ExponentModel> {
        match self.model.kind {
            ModelName::Identity => Some(ExponentModel::Direct),
            ModelName::Smoothing => {
                let k = self.model.kappa.unwrap_or(1.0);
                (k.fract() == 0.0).then_some(ExponentModel::Smoothing { kappa: k as i64 })
            }
            ModelName::Darcy => Some(ExponentModel::Darcy),
            ModelName::Schroedinger => Some(ExponentModel::Schroedinger),
        }
    }

    pub fn j_max(&self) -> u32 {
        self.sweep
            .j_max
            .unwrap_or(if self.model.dim == 1 { 18 } else { 9 })
    }

    /// Noise levels, largest first.
    pub fn eps_grid(&self) -> Vec<f64> {
        match (&self.sweep.eps, self.sweep.eps_max) {
            (Some(list), _) => list.clone(),
            (None, Some(top)) => (0..self.sweep.n_eps)
                .map(|i| top * 0.5f64.powi(i as i32))
                .collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.model.dim) {
            return Err(config_err(format!(
                "dim must be 1 or 2, got {}",
                self.model.dim
            )));
        }
        self.family()?;
        if let Some(k) = self.model.kappa {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(config_err(format!("kappa must be non-negative, got {k}")));
            }
        }
        self.link()
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        if !(self.prior.alpha > 0.0 && self.prior.alpha.is_finite()) {
            return Err(config_err(format!(
                "prior alpha must be positive, got {}",
                self.prior.alpha
            )));
        }
        let eps = self.eps_grid();
        if eps.len() < 5 {
            return Err(config_err(format!(
                "need at least 5 noise levels, got {}",
                eps.len()
            )));
        }
        if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(config_err(format!(
                "noise levels must be positive and finite, got {bad}"
            )));
        }
        let mut sorted = eps.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("noise levels must be distinct"));
        }
        if self.sweep.replicates < 20 {
            return Err(config_err(format!(
                "need at least 20 replicates, got {}",
                self.sweep.replicates
            )));
        }
        if self.sweep.replicates >= 1 << 16 || eps.len() >= 1 << 16 {
            return Err(config_err("too many replicates or noise levels"));
        }
        if self.sweep.j_min > self.j_max() {
            return Err(config_err(format!(
                "j_min {} exceeds j_max {}",
                self.sweep.j_min,
                self.j_max()
            )));
        }
        self.basis(self.j_max())?;
        if !(self.sweep.lambda_constant > 0.0 && self.sweep.lambda_constant.is_finite()) {
            return Err(config_err("lambda_constant must be positive"));
        }
        if self.map.max_iters == 0 || !(self.map.tol > 0.0) || self.map.restarts == 0 {
            return Err(config_err(
                "map settings need max_iters, tol and restarts positive",
            ));
        }
        let g = &self.gaussian;
        if !(g.rho_min > 0.0 && g.rho_max >= g.rho_min && g.rho_per_octave > 0) {
            return Err(config_err(
                "gaussian rho grid needs 0 < rho_min <= rho_max and rho_per_octave > 0",
            ));
        }
        if self.sweep.estimator != EstimatorKind::Map && self.model.kind != ModelName::Identity {
            return Err(config_err(format!(
                "estimator {} needs the identity model",
                self.sweep.estimator.tag()
            )));
        }
        Ok(())
    }
}
