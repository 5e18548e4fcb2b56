//! Weighted wavelet sequence norms.

use serde::{Deserialize, Serialize};

use super::CoefficientTree;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqNorm {
    /// `(Σ_k 2^{qk(s+d/2-d/p)} (Σ_l |F_kl|^p)^{q/p})^{1/q}`; `p` or `q` may be infinite.
    Besov { s: f64, p: f64, q: f64 },
    /// `Σ_k 2^{(α-d/2)k} Σ_l |h_kl|`, the ℓ¹ penalty matching the Laplace prior.
    ZTilde { alpha: f64 },
    /// `(Σ_k 2^{(2α-d)k} Σ_l h_kl²)^{1/2}`.
    QTilde { alpha: f64 },
    /// `(Σ_k 2^{-2κk} Σ_l h_kl²)^{1/2}`, standing in for the dual Sobolev norm.
    NegSobolev { kappa: f64 },
}

/// Evaluates `n` on `c`. The coarse coefficient is counted with level 0.
pub fn seq_norm(c: &CoefficientTree, n: SeqNorm) -> Result<f64> {
    let d = c.dim() as f64;
    match n {
        SeqNorm::Besov { s, p, q } => {
            if !s.is_finite() || p.is_nan() || q.is_nan() || p < 1.0 || q < 1.0 {
                return Err(invalid(format!(
                    "Besov parameters out of range: s={s}, p={p}, q={q}"
                )));
            }
            let exp_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
            let terms = (0..c.max_level().max(1)).map(|k| {
                let coeffs = scale_coeffs(c, k);
                let inner = lp(coeffs, p);
                2f64.powf(k as f64 * (s + d / 2.0 - d * exp_p)) * inner
            });
            Ok(lp(terms, q))
        }
        SeqNorm::ZTilde { alpha } => {
            finite(alpha)?;
            Ok((0..c.max_level().max(1))
                .map(|k| {
                    2f64.powf((alpha - d / 2.0) * k as f64)
                        * scale_coeffs(c, k).map(f64::abs).sum::<f64>()
                })
                .sum())
        }
        SeqNorm::QTilde { alpha } => {
            finite(alpha)?;
            Ok(weighted_l2(c, |k| 2f64.powf((2.0 * alpha - d) * k as f64)))
        }
        SeqNorm::NegSobolev { kappa } => {
            finite(kappa)?;
            Ok(weighted_l2(c, |k| 2f64.powf(-2.0 * kappa * k as f64)))
        }
    }
}

fn finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("norm parameter must be finite, got {v}")))
    }
}

/// Coefficients at scale `k`; scale 0 also carries the coarse coefficient.
fn scale_coeffs(c: &CoefficientTree, k: u32) -> impl Iterator<Item = f64> + '_ {
    let coarse = if k == 0 { Some(c.coarse()) } else { None };
    let detail: &[f64] = if k < c.max_level() { c.level(k) } else { &[] };
    coarse.into_iter().chain(detail.iter().copied())
}

fn lp(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.map(f64::abs).sum()
    } else if p == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values.map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn weighted_l2(c: &CoefficientTree, w: impl Fn(u32) -> f64) -> f64 {
    (0..c.max_level().max(1))
        .map(|k| w(k) * scale_coeffs(c, k).map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}
