//! Library of ground-truth parameters `F₀`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridFunction;
use crate::prior::CutoffSpec;
use crate::wavelet::{dwt_forward, CoefficientTree, WaveletBasis};

/// Axis-aligned box with a constant value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TruthSpec {
    Zero,
    /// `a·exp(1 − 1/(1 − r²))` with `r = |x − center| / width`, a C^∞ bump.
    SmoothBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// Sum of indicator boxes. Use non-dyadic edges for a genuinely
    /// inhomogeneous truth.
    PiecewiseBlocks {
        blocks: Vec<Block>,
    },
    /// A broad bump plus a narrow, tall one.
    SpikeAndSmooth {
        smooth: Box<TruthSpec>,
        spike_center: Vec<f64>,
        spike_width: f64,
        spike_amplitude: f64,
    },
}

impl TruthSpec {
    pub fn default_bump(dim: usize) -> Self {
        TruthSpec::SmoothBump {
            center: vec![0.5; dim],
            width: 0.25,
            amplitude: 1.0,
        }
    }

    /// Three blocks with edges at 0.23, 0.37, 0.52, 0.61, 0.77 along the first
    /// axis (extended over `[0.25, 0.75]` in the remaining axes).
    pub fn default_blocks(dim: usize) -> Self {
        let make = |a: f64, b: f64, h: f64| {
            let mut lo = vec![0.25; dim];
            let mut hi = vec![0.75; dim];
            lo[0] = a;
            hi[0] = b;
            Block { lo, hi, height: h }
        };
        TruthSpec::PiecewiseBlocks {
            blocks: vec![
                make(0.23, 0.37, 1.0),
                make(0.37, 0.52, -0.6),
                make(0.61, 0.77, 0.8),
            ],
        }
    }

    pub fn default_spike(dim: usize) -> Self {
        TruthSpec::SpikeAndSmooth {
            smooth: Box::new(TruthSpec::SmoothBump {
                center: vec![0.45; dim],
                width: 0.2,
                amplitude: 0.6,
            }),
            spike_center: vec![0.7; dim],
            spike_width: 0.03,
            spike_amplitude: 1.0,
        }
    }

    /// Closed bounding box `(lo, hi)` per axis, `None` for the zero truth.
    fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            TruthSpec::Zero => None,
            TruthSpec::SmoothBump { center, width, .. } => Some((
                center.iter().map(|c| c - width).collect(),
                center.iter().map(|c| c + width).collect(),
            )),
            TruthSpec::PiecewiseBlocks { blocks } => blocks
                .iter()
                .filter(|b| b.height != 0.0)
                .fold(None, |acc, b| {
                    Some(match acc {
                        None => (b.lo.clone(), b.hi.clone()),
                        Some((lo, hi)) => (
                            lo.iter().zip(&b.lo).map(|(a, b)| a.min(*b)).collect(),
                            hi.iter().zip(&b.hi).map(|(a, b)| a.max(*b)).collect(),
                        ),
                    })
                }),
            TruthSpec::SpikeAndSmooth {
                smooth,
                spike_center,
                spike_width,
                ..
            } => {
                let spike = (
                    spike_center
                        .iter()
                        .map(|c| c - spike_width)
                        .collect::<Vec<_>>(),
                    spike_center
                        .iter()
                        .map(|c| c + spike_width)
                        .collect::<Vec<_>>(),
                );
                Some(match smooth.support() {
                    None => spike,
                    Some((lo, hi)) => (
                        lo.iter().zip(&spike.0).map(|(a, b)| a.min(*b)).collect(),
                        hi.iter().zip(&spike.1).map(|(a, b)| a.max(*b)).collect(),
                    ),
                })
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check_len = |v: &[f64], what: &str| {
            if v.len() != dim {
                Err(invalid(format!(
                    "{what} has {} coordinates, expected {dim}",
                    v.len()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            TruthSpec::Zero => Ok(()),
            TruthSpec::SmoothBump {
                center,
                width,
                amplitude,
            } => {
                check_len(center, "bump center")?;
                if !(*width > 0.0) || !amplitude.is_finite() {
                    return Err(invalid("bump needs positive width and finite amplitude"));
                }
                Ok(())
            }
            TruthSpec::PiecewiseBlocks { blocks } => {
                for b in blocks {
                    check_len(&b.lo, "block lower corner")?;
                    check_len(&b.hi, "block upper corner")?;
                    if b.lo.iter().zip(&b.hi).any(|(l, h)| !(l < h)) || !b.height.is_finite() {
                        return Err(invalid("blocks need lo < hi and a finite height"));
                    }
                }
                Ok(())
            }
            TruthSpec::SpikeAndSmooth {
                smooth,
                spike_center,
                spike_width,
                spike_amplitude,
            } => {
                smooth.validate(dim)?;
                check_len(spike_center, "spike center")?;
                if !(*spike_width > 0.0) || !spike_amplitude.is_finite() {
                    return Err(invalid("spike needs positive width and finite amplitude"));
                }
                Ok(())
            }
        }
    }

    /// Cell averages on the `2^level` grid.
    pub fn cell_averages(&self, dim: usize, level: u32) -> Result<GridFunction> {
        self.validate(dim)?;
        Ok(match self {
            TruthSpec::Zero => GridFunction::zeros(dim, level),
            TruthSpec::PiecewiseBlocks { blocks } => {
                let h = 1.0 / (1u64 << level) as f64;
                let mut g = GridFunction::zeros(dim, level);
                let n = g.per_axis();
                for (idx, v) in g.values_mut().iter_mut().enumerate() {
                    let cell: Vec<usize> = if dim == 1 {
                        vec![idx]
                    } else {
                        vec![idx / n, idx % n]
                    };
                    for b in blocks {
                        let frac: f64 = (0..dim)
                            .map(|a| {
                                let (c0, c1) = (cell[a] as f64 * h, (cell[a] + 1) as f64 * h);
                                ((c1.min(b.hi[a]) - c0.max(b.lo[a])).max(0.0)) / h
                            })
                            .product();
                        *v += b.height * frac;
                    }
                }
                g
            }
            _ => quadrature_averages(dim, level, |x| self.point_value(x)),
        })
    }

    fn point_value(&self, x: &[f64]) -> f64 {
        match self {
            TruthSpec::Zero => 0.0,
            TruthSpec::SmoothBump {
                center,
                width,
                amplitude,
            } => amplitude * bump(x, center, *width),
            TruthSpec::PiecewiseBlocks { blocks } => blocks
                .iter()
                .filter(|b| {
                    x.iter()
                        .zip(b.lo.iter().zip(&b.hi))
                        .all(|(v, (l, h))| l <= v && v < h)
                })
                .map(|b| b.height)
                .sum(),
            TruthSpec::SpikeAndSmooth {
                smooth,
                spike_center,
                spike_width,
                spike_amplitude,
            } => smooth.point_value(x) + spike_amplitude * bump(x, spike_center, *spike_width),
        }
    }
}

fn bump(x: &[f64], center: &[f64], width: f64) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(center)
        .map(|(a, c)| ((a - c) / width).powi(2))
        .sum();
    if r2 < 1.0 {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Five-point Gauss–Legendre cell averages.
fn quadrature_averages(dim: usize, level: u32, f: impl Fn(&[f64]) -> f64) -> GridFunction {
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let mut g = GridFunction::zeros(dim, level);
    let h = g.cell_size();
    for idx in 0..g.len() {
        let c = g.cell_center(idx);
        let mut acc = 0.0;
        if dim == 1 {
            for (t, w) in NODES.iter().zip(WEIGHTS) {
                acc += w * f(&[c[0] + 0.5 * h * t]);
            }
            acc *= 0.5;
        } else {
            for (t, w) in NODES.iter().zip(WEIGHTS) {
                for (s, v) in NODES.iter().zip(WEIGHTS) {
                    acc += w * v * f(&[c[0] + 0.5 * h * t, c[1] + 0.5 * h * s]);
                }
            }
            acc *= 0.25;
        }
        g.values_mut()[idx] = acc;
    }
    g
}

/// Level-wise `Z̃_α` contributions `2^{(α-d/2)k} Σ_l |c_kl|` and their
/// partial sums, used to judge the declared smoothness.
#[derive(Debug, Clone, Serialize)]
pub struct TruthCertificate {
    pub alpha: f64,
    pub level_terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

impl TruthCertificate {
    pub fn new(c: &CoefficientTree, alpha: f64) -> Self {
        let d = c.dim() as f64;
        let mut level_terms = vec![c.coarse().abs()];
        for k in 0..c.max_level() {
            if k == 0 {
                level_terms[0] += c.level(0).iter().map(|v| v.abs()).sum::<f64>();
                continue;
            }
            level_terms.push(
                2f64.powf((alpha - d / 2.0) * k as f64)
                    * c.level(k).iter().map(|v| v.abs()).sum::<f64>(),
            );
        }
        let partial_sums = level_terms
            .iter()
            .scan(0.0, |s, t| {
                *s += t;
                Some(*s)
            })
            .collect();
        Self {
            alpha,
            level_terms,
            partial_sums,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Truth {
    pub coefficients: CoefficientTree,
    pub certificate: TruthCertificate,
}

/// `F₀` on `basis` together with its `Z̃_α` certificate.
///
/// The support must lie in the inner box `K` of `cutoff`, where `χ = 1`.
pub fn make_truth(
    spec: &TruthSpec,
    basis: &WaveletBasis,
    alpha: f64,
    cutoff: &CutoffSpec,
) -> Result<Truth> {
    if let Some((lo, hi)) = spec.support() {
        if lo.iter().any(|&l| l < cutoff.inner_lo) || hi.iter().any(|&h| h > cutoff.inner_hi) {
            return Err(invalid(format!(
                "truth support {lo:?}..{hi:?} leaves the inner box [{}, {}]",
                cutoff.inner_lo, cutoff.inner_hi
            )));
        }
    }
    let coefficients = dwt_forward(&spec.cell_averages(basis.dim, basis.max_level)?, basis)?;
    let certificate = TruthCertificate::new(&coefficients, alpha);
    Ok(Truth {
        coefficients,
        certificate,
    })
}
