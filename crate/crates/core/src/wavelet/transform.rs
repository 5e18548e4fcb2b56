//! Periodized fast wavelet transforms.
//!
//! Grid values are cell averages; the orthonormal coordinates of the
//! piecewise-constant function are `v_i h^{d/2}`, and the filter bank below is
//! an orthogonal map on those coordinates. Hence the transforms are exact
//! inverses of each other and preserve the grid L² norm.

use super::{filters, CoefficientTree, WaveletBasis};
use crate::error::{invalid, Result};
use crate::grid::GridFunction;

/// Analysis: grid function to wavelet coefficients.
pub fn dwt_forward(f: &GridFunction, basis: &WaveletBasis) -> Result<CoefficientTree> {
    basis.validate()?;
    if f.dim() != basis.dim || f.level() != basis.max_level {
        return Err(invalid(format!(
            "grid (d={}, J={}) does not match basis (d={}, J={})",
            f.dim(),
            f.level(),
            basis.dim,
            basis.max_level
        )));
    }
    let scale = f.cell_volume().sqrt();
    let mut x: Vec<f64> = f.values().iter().map(|v| v * scale).collect();
    let bank = FilterBank::new(basis)?;
    match basis.dim {
        1 => {
            bank.analysis_1d(&mut x);
            CoefficientTree::from_vec(basis, x)
        }
        _ => {
            bank.analysis_2d(&mut x, f.per_axis());
            CoefficientTree::from_vec(basis, pack_2d(&x, basis.max_level))
        }
    }
}

/// Synthesis: wavelet coefficients to grid function.
pub fn dwt_inverse(c: &CoefficientTree, basis: &WaveletBasis) -> Result<GridFunction> {
    basis.validate()?;
    c.check_basis(basis)?;
    let bank = FilterBank::new(basis)?;
    let n = 1usize << basis.max_level;
    let mut x = match basis.dim {
        1 => {
            let mut x = c.as_slice().to_vec();
            bank.synthesis_1d(&mut x);
            x
        }
        _ => {
            let mut x = unpack_2d(c.as_slice(), basis.max_level);
            bank.synthesis_2d(&mut x, n);
            x
        }
    };
    let scale = (n as f64).powi(basis.dim as i32).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    GridFunction::from_values(basis.dim, basis.max_level, x)
}

struct FilterBank {
    low: &'static [f64],
    high: Vec<f64>,
}

impl FilterBank {
    fn new(basis: &WaveletBasis) -> Result<Self> {
        let low = basis.family.lowpass()?;
        Ok(Self {
            low,
            high: filters::highpass(low),
        })
    }

    /// One analysis step on `x[..m]` (gathered into `buf`), writing
    /// `[approx | detail]` back in place.
    fn step_forward(&self, seg: &mut [f64], tmp: &mut Vec<f64>) {
        let m = seg.len();
        let half = m / 2;
        tmp.clear();
        tmp.resize(m, 0.0);
        for i in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (j, (&h, &g)) in self.low.iter().zip(&self.high).enumerate() {
                let v = seg[(2 * i + j) % m];
                a += h * v;
                d += g * v;
            }
            tmp[i] = a;
            tmp[half + i] = d;
        }
        seg.copy_from_slice(tmp);
    }

    fn step_inverse(&self, seg: &mut [f64], tmp: &mut Vec<f64>) {
        let m = seg.len();
        let half = m / 2;
        tmp.clear();
        tmp.resize(m, 0.0);
        for i in 0..half {
            let (a, d) = (seg[i], seg[half + i]);
            for (j, (&h, &g)) in self.low.iter().zip(&self.high).enumerate() {
                tmp[(2 * i + j) % m] += h * a + g * d;
            }
        }
        seg.copy_from_slice(tmp);
    }

    fn analysis_1d(&self, x: &mut [f64]) {
        let mut tmp = Vec::new();
        let mut m = x.len();
        while m > 1 {
            self.step_forward(&mut x[..m], &mut tmp);
            m /= 2;
        }
    }

    fn synthesis_1d(&self, x: &mut [f64]) {
        let mut tmp = Vec::new();
        let mut m = 2;
        while m <= x.len() {
            self.step_inverse(&mut x[..m], &mut tmp);
            m *= 2;
        }
    }

    fn analysis_2d(&self, x: &mut [f64], n: usize) {
        let mut tmp = Vec::new();
        let mut line = Vec::with_capacity(n);
        let mut m = n;
        while m > 1 {
            for r in 0..m {
                self.step_forward(&mut x[r * n..r * n + m], &mut tmp);
            }
            for c in 0..m {
                line.clear();
                line.extend((0..m).map(|r| x[r * n + c]));
                self.step_forward(&mut line, &mut tmp);
                for (r, v) in line.iter().enumerate() {
                    x[r * n + c] = *v;
                }
            }
            m /= 2;
        }
    }

    fn synthesis_2d(&self, x: &mut [f64], n: usize) {
        let mut tmp = Vec::new();
        let mut line = Vec::with_capacity(n);
        let mut m = 2;
        while m <= n {
            for c in 0..m {
                line.clear();
                line.extend((0..m).map(|r| x[r * n + c]));
                self.step_inverse(&mut line, &mut tmp);
                for (r, v) in line.iter().enumerate() {
                    x[r * n + c] = *v;
                }
            }
            for r in 0..m {
                self.step_inverse(&mut x[r * n..r * n + m], &mut tmp);
            }
            m *= 2;
        }
    }
}

/// Blocks of detail level `k` inside the `n × n` pyramid, in storage order:
/// (low, high), (high, low), (high, high) for (row, column) filtering.
fn level_blocks(k: u32) -> [(usize, usize); 3] {
    let s = 1usize << k;
    [(0, s), (s, 0), (s, s)]
}

fn pack_2d(pyramid: &[f64], levels: u32) -> Vec<f64> {
    let n = 1usize << levels;
    let mut out = Vec::with_capacity(n * n);
    out.push(pyramid[0]);
    for k in 0..levels {
        let s = 1usize << k;
        for (r0, c0) in level_blocks(k) {
            for r in 0..s {
                out.extend_from_slice(&pyramid[(r0 + r) * n + c0..(r0 + r) * n + c0 + s]);
            }
        }
    }
    out
}

fn unpack_2d(flat: &[f64], levels: u32) -> Vec<f64> {
    let n = 1usize << levels;
    let mut out = vec![0.0; n * n];
    out[0] = flat[0];
    let mut pos = 1;
    for k in 0..levels {
        let s = 1usize << k;
        for (r0, c0) in level_blocks(k) {
            for r in 0..s {
                out[(r0 + r) * n + c0..(r0 + r) * n + c0 + s].copy_from_slice(&flat[pos..pos + s]);
                pos += s;
            }
        }
    }
    out
}
