//! Periodized orthonormal wavelet bases on `[0,1]^d`, coefficient trees and
//! weighted sequence norms.
//!
//! Coefficients are stored flat in level order: index 0 is the coarse scaling
//! coefficient, detail level `k` occupies `2^{dk} .. 2^{d(k+1)}`. In one
//! dimension level `k` therefore holds `2^k` wavelets, in two dimensions
//! `3·4^k` (the three tensor orientations, each a `2^k × 2^k` block stored
//! row-major). The coarse coefficient shares the weights of level 0.

mod filters;
mod norms;
mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use norms::{seq_norm, SeqNorm};
pub use transform::{dwt_forward, dwt_inverse};

/// Largest supported level per axis; bounds memory to `2^24` cells.
pub const MAX_LEVEL_1D: u32 = 24;
pub const MAX_LEVEL_2D: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name", content = "moments")]
pub enum Family {
    Haar,
    /// Daubechies wavelet with the given number of vanishing moments (2..=6).
    Daubechies(usize),
}

impl Family {
    pub(crate) fn lowpass(&self) -> Result<&'static [f64]> {
        let n = match self {
            Family::Haar => 1,
            Family::Daubechies(n) => *n,
        };
        filters::daubechies_lowpass(n).ok_or_else(|| {
            invalid(format!(
                "unsupported Daubechies order {n} (expected 2 to 6)"
            ))
        })
    }

    /// Number of vanishing moments.
    pub fn vanishing_moments(&self) -> usize {
        match self {
            Family::Haar => 1,
            Family::Daubechies(n) => *n,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Haar => f.write_str("haar"),
            Family::Daubechies(n) => write!(f, "db{n}"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "haar" | "db1" => Ok(Family::Haar),
            _ => lower
                .strip_prefix("db")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|n| (2..=6).contains(n))
                .map(Family::Daubechies)
                .ok_or_else(|| invalid(format!("unknown wavelet family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletBasis {
    pub family: Family,
    pub dim: usize,
    pub max_level: u32,
}

impl WaveletBasis {
    pub fn new(family: Family, dim: usize, max_level: u32) -> Result<Self> {
        let basis = Self {
            family,
            dim,
            max_level,
        };
        basis.validate()?;
        Ok(basis)
    }

    pub fn haar(dim: usize, max_level: u32) -> Result<Self> {
        Self::new(Family::Haar, dim, max_level)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.lowpass()?;
        let cap = match self.dim {
            1 => MAX_LEVEL_1D,
            2 => MAX_LEVEL_2D,
            d => return Err(invalid(format!("dimension must be 1 or 2, got {d}"))),
        };
        if self.max_level > cap {
            return Err(invalid(format!(
                "max level {} exceeds {cap} for d={}",
                self.max_level, self.dim
            )));
        }
        Ok(())
    }

    /// Total number of coefficients, `2^{dJ}`.
    pub fn size(&self) -> usize {
        1 << (self.dim as u32 * self.max_level)
    }

    /// Number of wavelets at detail level `k`, `(2^d - 1) 2^{dk}`.
    pub fn level_len(&self, k: u32) -> usize {
        ((1 << self.dim) - 1) << (self.dim as u32 * k)
    }

    pub fn with_level(&self, max_level: u32) -> Self {
        Self { max_level, ..*self }
    }
}

/// Wavelet coefficients of a function on the `2^J` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTree {
    dim: usize,
    max_level: u32,
    data: Vec<f64>,
}

impl CoefficientTree {
    pub fn zeros(basis: &WaveletBasis) -> Self {
        Self {
            dim: basis.dim,
            max_level: basis.max_level,
            data: vec![0.0; basis.size()],
        }
    }

    pub fn from_vec(basis: &WaveletBasis, data: Vec<f64>) -> Result<Self> {
        if data.len() != basis.size() {
            return Err(invalid(format!(
                "coefficient vector of length {} does not match basis size {}",
                data.len(),
                basis.size()
            )));
        }
        Ok(Self {
            dim: basis.dim,
            max_level: basis.max_level,
            data,
        })
    }

    /// Tree with a single unit coefficient at `(level, index)`.
    pub fn unit(basis: &WaveletBasis, level: u32, index: usize) -> Result<Self> {
        if level >= basis.max_level || index >= basis.level_len(level) {
            return Err(invalid(format!(
                "no wavelet ({level}, {index}) in basis with J={}",
                basis.max_level
            )));
        }
        let mut t = Self::zeros(basis);
        t.data[(1 << (basis.dim as u32 * level)) + index] = 1.0;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn coarse(&self) -> f64 {
        self.data[0]
    }

    pub fn level_range(&self, k: u32) -> std::ops::Range<usize> {
        let start = 1usize << (self.dim as u32 * k);
        start..start << self.dim
    }

    pub fn level(&self, k: u32) -> &[f64] {
        &self.data[self.level_range(k)]
    }

    pub fn level_mut(&mut self, k: u32) -> &mut [f64] {
        let r = self.level_range(k);
        &mut self.data[r]
    }

    /// Scale index of flat position `i`: 0 for the coarse coefficient,
    /// otherwise the detail level.
    pub fn scale_of(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            (usize::BITS - 1 - i.leading_zeros()) / self.dim as u32
        }
    }

    /// Per-coefficient weights `w(k)` evaluated at each scale index.
    pub fn level_weights(&self, w: impl Fn(u32) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        out.push(w(0));
        for k in 0..self.max_level {
            let wk = w(k);
            out.extend(std::iter::repeat_n(wk, self.level_range(k).len()));
        }
        out
    }

    pub fn matches(&self, basis: &WaveletBasis) -> bool {
        self.dim == basis.dim && self.max_level == basis.max_level
    }

    pub fn check_basis(&self, basis: &WaveletBasis) -> Result<()> {
        if self.matches(basis) {
            Ok(())
        } else {
            Err(invalid(format!(
                "tree shape (d={}, J={}) does not match basis (d={}, J={})",
                self.dim, self.max_level, basis.dim, basis.max_level
            )))
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.max_level == other.max_level
    }

    pub fn dot(&self, other: &Self) -> f64 {
        crate::grid::dot(&self.data, &other.data)
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x + a * y)
            .collect();
        Self { data, ..*self }
    }
}

impl std::ops::Index<usize> for CoefficientTree {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for CoefficientTree {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_counts() {
        for d in 1..=2 {
            let b = WaveletBasis::haar(d, 5).unwrap();
            let t = CoefficientTree::zeros(&b);
            let mut total = 1;
            for k in 0..5 {
                let expected = ((1 << d) - 1) * (1usize << (d as u32 * k));
                assert_eq!(t.level(k).len(), expected);
                assert_eq!(b.level_len(k), expected);
                total += expected;
            }
            assert_eq!(total, b.size());
        }
    }

    #[test]
    fn scale_index_matches_ranges() {
        let b = WaveletBasis::haar(2, 4).unwrap();
        let t = CoefficientTree::zeros(&b);
        assert_eq!(t.scale_of(0), 0);
        for k in 0..4 {
            for i in t.level_range(k) {
                assert_eq!(t.scale_of(i), k);
            }
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("haar".parse::<Family>().unwrap(), Family::Haar);
        assert_eq!("db3".parse::<Family>().unwrap(), Family::Daubechies(3));
        assert!("db7".parse::<Family>().is_err());
        assert!(WaveletBasis::new(Family::Daubechies(7), 1, 3).is_err());
        assert!(WaveletBasis::haar(3, 3).is_err());
    }
}
