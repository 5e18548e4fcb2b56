//! Smooth cutoff `χ`: equal to one on `[a, b]^d`, zero outside
//! `[a - m, b + m]^d`, glued with the `exp(-1/t)` smooth step.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    /// Lower corner of the inner cube `K` where `χ ≡ 1`.
    pub inner_lo: f64,
    /// Upper corner of `K`.
    pub inner_hi: f64,
    /// Width of the transition band.
    pub margin: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            inner_lo: 0.2,
            inner_hi: 0.8,
            margin: 0.1,
        }
    }
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.margin > 0.0
            && self.inner_lo < self.inner_hi
            && self.inner_lo - self.margin > 0.0
            && self.inner_hi + self.margin < 1.0;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "cutoff support must satisfy 0 < a-m < a < b < b+m < 1, got {self:?}"
            )))
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.inner_lo - self.margin, self.inner_hi + self.margin)
    }

    /// `χ` at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.eval_1d(t)).product()
    }

    fn eval_1d(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        smooth_step((t - lo) / self.margin) * smooth_step((hi - t) / self.margin)
    }

    /// Whether a point lies in the closed inner cube `K`.
    pub fn in_inner(&self, x: &[f64]) -> bool {
        x.iter().all(|&t| t >= self.inner_lo && t <= self.inner_hi)
    }

    /// Whether a point lies in the open support of `χ`.
    pub fn in_support(&self, x: &[f64]) -> bool {
        let (lo, hi) = self.support();
        x.iter().all(|&t| t > lo && t < hi)
    }

    /// `χ` sampled at the cell centres of a grid.
    pub fn on_grid(&self, dim: usize, level: u32) -> GridFunction {
        GridFunction::from_fn(dim, level, |x| self.eval(x))
    }
}

fn bump_edge(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let a = bump_edge(t);
    let b = bump_edge(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}
