//! Uniform cell grids on the unit box.
//!
//! A [`GridFunction`] stores one value per cell of the `2^J`-per-axis grid on
//! `[0,1]^d`. Values are interpreted as cell averages, so the grid L² norm is
//! `(h^d Σ v²)^{1/2}` with `h = 2^{-J}`. In two dimensions values are stored
//! row-major with the second coordinate varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    dim: usize,
    level: u32,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(dim: usize, level: u32) -> Self {
        let n = 1usize << (dim as u32 * level);
        Self {
            dim,
            level,
            values: vec![0.0; n],
        }
    }

    pub fn constant(dim: usize, level: u32, value: f64) -> Self {
        let mut g = Self::zeros(dim, level);
        g.values.fill(value);
        g
    }

    pub fn from_values(dim: usize, level: u32, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        let n = 1usize << (dim as u32 * level);
        if values.len() != n {
            return Err(invalid(format!(
                "grid of dimension {dim} at level {level} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dim, level, values })
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(dim: usize, level: u32, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut g = Self::zeros(dim, level);
        let n = g.per_axis();
        let h = g.cell_size();
        match dim {
            1 => {
                for i in 0..n {
                    g.values[i] = f(&[(i as f64 + 0.5) * h]);
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        g.values[i * n + j] = f(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
                    }
                }
            }
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn per_axis(&self) -> usize {
        1 << self.level
    }

    pub fn cell_size(&self) -> f64 {
        1.0 / self.per_axis() as f64
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.cell_size().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Centre of cell `idx` (flat index).
    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let h = self.cell_size();
        match self.dim {
            1 => vec![(idx as f64 + 0.5) * h],
            _ => {
                let n = self.per_axis();
                vec![((idx / n) as f64 + 0.5) * h, ((idx % n) as f64 + 0.5) * h]
            }
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.level == other.level
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(invalid(format!(
                "grid shape mismatch: (d={}, J={}) vs (d={}, J={})",
                self.dim, self.level, other.dim, other.level
            )))
        }
    }

    /// Grid L² inner product `h^d Σ a_i b_i`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.cell_volume() * dot(&self.values, &other.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            level: self.level,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.same_shape(other));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            dim: self.dim,
            level: self.level,
            values,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    /// Average of the `2^d` children of each coarse cell.
    pub fn restrict(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(invalid("cannot restrict a level-0 grid"));
        }
        let mut out = Self::zeros(self.dim, self.level - 1);
        let n = self.per_axis();
        let m = n / 2;
        match self.dim {
            1 => {
                for i in 0..m {
                    out.values[i] = 0.5 * (self.values[2 * i] + self.values[2 * i + 1]);
                }
            }
            _ => {
                for i in 0..m {
                    for j in 0..m {
                        let s = self.values[2 * i * n + 2 * j]
                            + self.values[2 * i * n + 2 * j + 1]
                            + self.values[(2 * i + 1) * n + 2 * j]
                            + self.values[(2 * i + 1) * n + 2 * j + 1];
                        out.values[i * m + j] = 0.25 * s;
                    }
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_unit_norm() {
        let g = GridFunction::constant(2, 3, 1.0);
        assert!((g.l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn restrict_preserves_mean() {
        let g = GridFunction::from_fn(2, 4, |x| x[0] * x[0] + 3.0 * x[1]);
        let r = g.restrict().unwrap();
        let mean = |g: &GridFunction| g.values().iter().sum::<f64>() / g.len() as f64;
        assert!((mean(&g) - mean(&r)).abs() < 1e-14);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(GridFunction::from_values(1, 3, vec![0.0; 7]).is_err());
        assert!(GridFunction::from_values(3, 1, vec![0.0; 8]).is_err());
    }
}
