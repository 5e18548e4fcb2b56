//! White-noise observations `Y = G(F) + εW` in wavelet coefficient form.
//!
//! Projecting white noise onto an orthonormal basis gives i.i.d. `N(0, ε²)`
//! coefficients, so an observation is the analysis of `G(F)` plus Gaussian
//! noise, truncated at the basis level.
//!
//! CSV dump format: one metadata line
//! `# eps=<f64> seed=<u64> stream=<u64> family=<name> dim=<d> level=<J>`
//! followed by a `level,index,value` table. The coarse coefficient has
//! level `-1`, index `0`; detail level `k` lists its coefficients in tree order.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::forward::ForwardModel;
use crate::seeding;
use crate::wavelet::{dwt_forward, CoefficientTree, Family, WaveletBasis};

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: CoefficientTree,
    pub eps: f64,
    pub seed: u64,
    pub stream: u64,
    pub basis: WaveletBasis,
}

impl Observation {
    /// `y = analysis(G(F)) + ε ξ` with noise from stream 0 of `seed`.
    pub fn simulate(
        model: &ForwardModel,
        truth: &CoefficientTree,
        eps: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::simulate_on_stream(model, truth, eps, seed, 0)
    }

    pub fn simulate_on_stream(
        model: &ForwardModel,
        truth: &CoefficientTree,
        eps: f64,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid(format!(
                "noise level must be finite and non-negative, got {eps}"
            )));
        }
        let signal = dwt_forward(&model.evaluate(truth)?, &model.basis)?;
        Ok(Self::from_signal(signal, eps, seed, stream, model.basis))
    }

    /// Adds noise to a precomputed noiseless coefficient vector.
    pub fn from_signal(
        signal: CoefficientTree,
        eps: f64,
        seed: u64,
        stream: u64,
        basis: WaveletBasis,
    ) -> Self {
        let mut rng = seeding::stream_rng(seed, stream);
        let mut y = signal;
        for a in y.as_mut_slice() {
            *a += eps * rng.sample::<f64, _>(StandardNormal);
        }
        Self {
            y,
            eps,
            seed,
            stream,
            basis,
        }
    }

    /// `(⟨y, a⟩ − ‖a‖²/2) / ε²` with `a` the analysis of `G(F)`.
    pub fn log_likelihood(&self, model: &ForwardModel, c: &CoefficientTree) -> Result<f64> {
        if !(self.eps > 0.0) {
            return Err(Error::Domain("log-likelihood needs eps > 0".into()));
        }
        let a = dwt_forward(&model.evaluate(c)?, &self.basis)?;
        Ok(log_likelihood_coeffs(&self.y, &a, self.eps))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# eps={} seed={} stream={} family={} dim={} level={}",
            self.eps,
            self.seed,
            self.stream,
            self.basis.family,
            self.basis.dim,
            self.basis.max_level
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "index", "value"])?;
        w.write_record([
            "-1".to_string(),
            "0".to_string(),
            format!("{:e}", self.y.coarse()),
        ])?;
        for k in 0..self.basis.max_level {
            for (i, v) in self.y.level(k).iter().enumerate() {
                w.write_record([k.to_string(), i.to_string(), format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut meta = String::new();
        input.read_line(&mut meta)?;
        let meta = meta
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| invalid("observation CSV must start with a `#` metadata line"))?;
        let field = |key: &str| -> Result<&str> {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| invalid(format!("observation metadata is missing `{key}`")))
        };
        let parse_err = |key: &str| invalid(format!("malformed `{key}` in observation metadata"));
        let eps: f64 = field("eps")?.parse().map_err(|_| parse_err("eps"))?;
        let seed: u64 = field("seed")?.parse().map_err(|_| parse_err("seed"))?;
        let stream: u64 = field("stream")?.parse().map_err(|_| parse_err("stream"))?;
        let family: Family = field("family")?.parse()?;
        let dim: usize = field("dim")?.parse().map_err(|_| parse_err("dim"))?;
        let level: u32 = field("level")?.parse().map_err(|_| parse_err("level"))?;
        let basis = WaveletBasis::new(family, dim, level)?;

        let mut y = CoefficientTree::zeros(&basis);
        let mut seen = vec![false; y.len()];
        let mut rdr = csv::Reader::from_reader(input);
        for rec in rdr.records() {
            let rec = rec?;
            let bad = || {
                invalid(format!(
                    "malformed observation row {:?}",
                    rec.iter().collect::<Vec<_>>()
                ))
            };
            let lvl: i64 = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(bad)?;
            let idx: usize = rec
                .get(1)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(bad)?;
            let val: f64 = rec
                .get(2)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(bad)?;
            let flat = match lvl {
                -1 if idx == 0 => 0,
                k if k >= 0 && (k as u32) < level => {
                    let r = y.level_range(k as u32);
                    if idx >= r.len() {
                        return Err(bad());
                    }
                    r.start + idx
                }
                _ => return Err(bad()),
            };
            y[flat] = val;
            seen[flat] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(invalid(format!(
                "observation CSV is missing coefficient {missing}"
            )));
        }
        Ok(Self {
            y,
            eps,
            seed,
            stream,
            basis,
        })
    }
}

/// Log-likelihood in coefficient space for a given noiseless signal `a`.
pub fn log_likelihood_coeffs(y: &CoefficientTree, a: &CoefficientTree, eps: f64) -> f64 {
    (y.dot(a) - 0.5 * a.dot(a)) / (eps * eps)
}
