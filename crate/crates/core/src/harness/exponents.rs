//! Exact rate exponents as rationals.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentModel {
    Direct,
    Smoothing { kappa: i64 },
    Darcy,
    Schroedinger,
}

impl ExponentModel {
    pub fn kappa(&self) -> i64 {
        match self {
            ExponentModel::Direct => 0,
            ExponentModel::Smoothing { kappa } => *kappa,
            ExponentModel::Darcy => 1,
            ExponentModel::Schroedinger => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Exponents {
    /// `δ_ε = ε^{(2κ+2α)/(2κ+2α+d)}`.
    #[serde(serialize_with = "ser_ratio")]
    pub delta: Ratio<i64>,
    /// Parameter-space exponent `θ` (PDE models), so `‖f − f₀‖ ≲ δ_ε^θ`.
    #[serde(serialize_with = "ser_opt_ratio")]
    pub theta: Option<Ratio<i64>>,
    /// Best linear rate exponent over the `B^α_11` ball (direct model, `d = 1`).
    #[serde(serialize_with = "ser_opt_ratio")]
    pub linear: Option<Ratio<i64>>,
    /// Minimax rate exponent over the same ball.
    #[serde(serialize_with = "ser_opt_ratio")]
    pub minimax: Option<Ratio<i64>>,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_opt_ratio<S: serde::Serializer>(
    r: &Option<Ratio<i64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

pub fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exponents for integer smoothness `α` in dimension `d`.
///
/// PDE models need `α > d + 2`; the direct and smoothing models need `α ≥ d`.
pub fn theoretical_exponents(model: ExponentModel, alpha: i64, d: i64) -> Result<Exponents> {
    if !(1..=3).contains(&d) {
        return Err(invalid(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let pde = matches!(model, ExponentModel::Darcy | ExponentModel::Schroedinger);
    if pde && alpha <= d + 2 {
        return Err(invalid(format!(
            "PDE exponents need alpha > d + 2 (alpha={alpha}, d={d})"
        )));
    }
    if !pde && alpha < d {
        return Err(invalid(format!(
            "exponents need alpha >= d (alpha={alpha}, d={d})"
        )));
    }
    let kappa = model.kappa();
    if kappa < 0 {
        return Err(invalid("smoothing degree must be non-negative"));
    }
    let delta = Ratio::new(2 * kappa + 2 * alpha, 2 * kappa + 2 * alpha + d);
    let theta = match model {
        ExponentModel::Darcy => Some(Ratio::new(alpha - d - 2, alpha - d)),
        ExponentModel::Schroedinger => Some(Ratio::new(alpha - d - 1, alpha - d + 1)),
        _ => None,
    };
    // With p = 1 the linear exponent (2α − (2−p)/p)/(2α + 1 − (2−p)/p) is (2α−1)/(2α).
    let (linear, minimax) = if model == ExponentModel::Direct && d == 1 {
        (
            Some(Ratio::new(2 * alpha - 1, 2 * alpha)),
            Some(Ratio::new(2 * alpha, 2 * alpha + 1)),
        )
    } else {
        (None, None)
    };
    Ok(Exponents {
        delta,
        theta,
        linear,
        minimax,
    })
}
