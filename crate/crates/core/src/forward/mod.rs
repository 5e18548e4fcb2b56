//! Forward maps `G` from wavelet coefficients to observable grid functions.
//!
//! Every model shares the parameter pipeline `c ↦ F = χ·(Wᵀc) ↦ f = Φ∘F`
//! (no cutoff and the identity link give `f = Wᵀc`). The model operator then
//! acts on `f`:
//!
//! * identity: `G = f`;
//! * linear smoothing: multiply wavelet coefficients of `f` by `2^{-κk}`;
//! * Darcy: `∇·(f∇u) = g` in the box, `u = 0` on the boundary;
//! * Schrödinger: `Δu/2 - f u = 0` in the box, `u = g` on the boundary.
//!
//! The PDEs use second-order cell-centred finite differences with arithmetic
//! face averages of `f`. Gradients are exact gradients of the discrete map
//! (discretize-then-optimize) computed with one adjoint solve.

mod lipschitz;
mod operator;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::prior::{CutoffSpec, LinkFunction};
use crate::wavelet::{dwt_forward, dwt_inverse, CoefficientTree, WaveletBasis};

pub use lipschitz::{lipschitz_probe, LipschitzStats};
use operator::{EllipticOperator, Faces};

pub const DEFAULT_DARCY_SOURCE: f64 = 2.0;
pub const DEFAULT_SCHROEDINGER_BOUNDARY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelKind {
    Identity,
    LinearSmoothing {
        kappa: f64,
    },
    /// Divergence-form equation with constant source `g`.
    Darcy {
        source: f64,
    },
    /// Schrödinger equation with constant Dirichlet data `g`.
    Schroedinger {
        boundary: f64,
    },
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Identity => "identity",
            ModelKind::LinearSmoothing { .. } => "smoothing",
            ModelKind::Darcy { .. } => "darcy",
            ModelKind::Schroedinger { .. } => "schroedinger",
        }
    }

    /// Degree of smoothing of the map.
    pub fn kappa(&self) -> f64 {
        match *self {
            ModelKind::Identity => 0.0,
            ModelKind::LinearSmoothing { kappa } => kappa,
            ModelKind::Darcy { .. } => 1.0,
            ModelKind::Schroedinger { .. } => 2.0,
        }
    }

    pub fn is_pde(&self) -> bool {
        matches!(
            self,
            ModelKind::Darcy { .. } | ModelKind::Schroedinger { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardModel {
    pub kind: ModelKind,
    pub basis: WaveletBasis,
    #[serde(default)]
    pub link: LinkFunction,
    #[serde(default)]
    pub cutoff: Option<CutoffSpec>,
}

/// Discrete PDE solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub u: GridFunction,
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Intermediate fields of one forward evaluation, reused by the gradient.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `F = χ·Wᵀc` on the grid.
    pub param: GridFunction,
    /// `f = Φ∘F`.
    pub coefficient: GridFunction,
    /// `G(c)`.
    pub output: GridFunction,
}

impl ForwardModel {
    pub fn new(
        kind: ModelKind,
        basis: WaveletBasis,
        link: LinkFunction,
        cutoff: Option<CutoffSpec>,
    ) -> Result<Self> {
        let model = Self {
            kind,
            basis,
            link,
            cutoff,
        };
        model.validate()?;
        Ok(model)
    }

    /// Direct observation of `Wᵀc`.
    pub fn identity(basis: WaveletBasis) -> Self {
        Self {
            kind: ModelKind::Identity,
            basis,
            link: LinkFunction::Identity,
            cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        self.link.validate()?;
        if let Some(c) = &self.cutoff {
            c.validate()?;
        }
        match self.kind {
            ModelKind::LinearSmoothing { kappa } if !(kappa >= 0.0 && kappa.is_finite()) => {
                Err(invalid(format!(
                    "smoothing degree must be non-negative, got {kappa}"
                )))
            }
            ModelKind::Darcy { source } if !source.is_finite() => {
                Err(invalid("Darcy source must be finite"))
            }
            ModelKind::Schroedinger { boundary } if !boundary.is_finite() => {
                Err(invalid("Schrödinger boundary value must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kind.kappa()
    }

    /// `F = χ·Wᵀc`.
    pub fn param_field(&self, c: &CoefficientTree) -> Result<GridFunction> {
        let v = dwt_inverse(c, &self.basis)?;
        Ok(match &self.cutoff {
            Some(cut) => v.zip_map(
                &cut.on_grid(self.basis.dim, self.basis.max_level),
                |a, b| a * b,
            ),
            None => v,
        })
    }

    /// `f = Φ∘χ·Wᵀc`.
    pub fn coefficient_field(&self, c: &CoefficientTree) -> Result<GridFunction> {
        Ok(self.param_field(c)?.map(|x| self.link.apply(x)))
    }

    pub fn check_admissible(&self, f: &GridFunction) -> Result<()> {
        let bad = match self.kind {
            ModelKind::Darcy { .. } => f.values().iter().position(|v| !(*v > 0.0 && v.is_finite())),
            ModelKind::Schroedinger { .. } => f
                .values()
                .iter()
                .position(|v| !(*v >= 0.0 && v.is_finite())),
            _ => f.values().iter().position(|v| !v.is_finite()),
        };
        match bad {
            None => Ok(()),
            Some(i) => Err(Error::Domain(format!(
                "{} model: coefficient {} at cell {i} is outside the admissible range",
                self.kind.tag(),
                f.values()[i]
            ))),
        }
    }

    /// `G(c)` on the grid.
    pub fn evaluate(&self, c: &CoefficientTree) -> Result<GridFunction> {
        Ok(self.evaluate_full(c)?.output)
    }

    pub fn evaluate_full(&self, c: &CoefficientTree) -> Result<Evaluation> {
        let param = self.param_field(c)?;
        let coefficient = param.map(|x| self.link.apply(x));
        let output = self.apply_operator(&coefficient)?;
        Ok(Evaluation {
            param,
            coefficient,
            output,
        })
    }

    /// Model operator applied to a coefficient field `f` directly.
    pub fn apply_operator(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check_admissible(f)?;
        match self.kind {
            ModelKind::Identity => Ok(f.clone()),
            ModelKind::LinearSmoothing { kappa } => self.smooth(f, kappa),
            ModelKind::Darcy { .. } | ModelKind::Schroedinger { .. } => Ok(self.solve_pde(f)?.u),
        }
    }

    fn smooth(&self, f: &GridFunction, kappa: f64) -> Result<GridFunction> {
        let c = dwt_forward(f, &self.basis)?;
        let w = c.level_weights(|k| 2f64.powf(-kappa * k as f64));
        let damped = CoefficientTree::from_vec(
            &self.basis,
            c.as_slice().iter().zip(&w).map(|(a, b)| a * b).collect(),
        )?;
        dwt_inverse(&damped, &self.basis)
    }

    fn faces(&self) -> Faces {
        Faces::new(self.basis.dim, self.basis.max_level)
    }

    fn pde_operator<'a>(&self, faces: &'a Faces, f: &[f64]) -> (EllipticOperator<'a>, Vec<f64>) {
        let dim = self.basis.dim;
        let inv_h2 = 1.0 / (faces.h * faces.h);
        match self.kind {
            ModelKind::Darcy { source } => {
                let (interior, boundary) = faces.face_average(f);
                let op = EllipticOperator {
                    faces,
                    interior,
                    boundary,
                    mass: None,
                    dim,
                };
                (op, vec![-source; faces.n_cells])
            }
            ModelKind::Schroedinger { boundary: g } => {
                let op = EllipticOperator {
                    faces,
                    interior: vec![0.5; faces.interior.len()],
                    boundary: vec![0.5; faces.boundary.len()],
                    mass: Some(f.to_vec()),
                    dim,
                };
                let mut rhs = vec![0.0; faces.n_cells];
                for &p in &faces.boundary {
                    rhs[p] += g * inv_h2;
                }
                (op, rhs)
            }
            _ => unreachable!("pde_operator called for a non-PDE model"),
        }
    }

    /// Finite-difference solution `u_f` for a PDE model.
    pub fn solve_pde(&self, f: &GridFunction) -> Result<PdeSolution> {
        if !self.kind.is_pde() {
            return Err(Error::UnsupportedModel(format!(
                "{} is not a PDE model",
                self.kind.tag()
            )));
        }
        self.check_admissible(f)?;
        let faces = self.faces();
        let (op, rhs) = self.pde_operator(&faces, f.values());
        let s = op.solve(&rhs)?;
        if !(s.relative_residual <= 1e-10) {
            return Err(Error::Solver(format!(
                "relative residual {:.3e} above 1e-10",
                s.relative_residual
            )));
        }
        Ok(PdeSolution {
            u: GridFunction::from_values(f.dim(), f.level(), s.u)?,
            relative_residual: s.relative_residual,
            iterations: s.iterations,
        })
    }

    /// Gradient of `c ↦ ⟨r, G(c)⟩` (grid L² pairing).
    pub fn adjoint_gradient(
        &self,
        c: &CoefficientTree,
        r: &GridFunction,
    ) -> Result<CoefficientTree> {
        let eval = self.evaluate_full(c)?;
        self.gradient_from(&eval, r)
    }

    /// Same as [`adjoint_gradient`](Self::adjoint_gradient) reusing a forward evaluation.
    pub fn gradient_from(&self, eval: &Evaluation, r: &GridFunction) -> Result<CoefficientTree> {
        eval.output.check_shape(r)?;
        // L² density of ∂⟨r, G⟩/∂f.
        let sensitivity = match self.kind {
            ModelKind::Identity => r.clone(),
            ModelKind::LinearSmoothing { kappa } => self.smooth(r, kappa)?,
            ModelKind::Darcy { .. } => {
                let faces = self.faces();
                let (op, _) = self.pde_operator(&faces, eval.coefficient.values());
                let w = op.solve(r.values())?.u;
                let u = eval.output.values();
                let inv_h2 = 1.0 / (faces.h * faces.h);
                let mut s = vec![0.0; faces.n_cells];
                for &(p, q) in &faces.interior {
                    let contrib = -0.5 * (w[p] - w[q]) * (u[p] - u[q]) * inv_h2;
                    s[p] += contrib;
                    s[q] += contrib;
                }
                for &p in &faces.boundary {
                    s[p] -= 2.0 * w[p] * u[p] * inv_h2;
                }
                GridFunction::from_values(r.dim(), r.level(), s)?
            }
            ModelKind::Schroedinger { .. } => {
                let faces = self.faces();
                let (op, _) = self.pde_operator(&faces, eval.coefficient.values());
                let w = op.solve(r.values())?.u;
                let s = w
                    .iter()
                    .zip(eval.output.values())
                    .map(|(a, b)| -a * b)
                    .collect();
                GridFunction::from_values(r.dim(), r.level(), s)?
            }
        };
        let mut chained = sensitivity.zip_map(&eval.param, |s, x| s * self.link.derivative(x));
        if let Some(cut) = &self.cutoff {
            chained = chained.zip_map(
                &cut.on_grid(self.basis.dim, self.basis.max_level),
                |a, b| a * b,
            );
        }
        dwt_forward(&chained, &self.basis)
    }

    /// Tangent-linear map `DG(c)·v`, computed by a forward sensitivity solve.
    pub fn linearized(&self, c: &CoefficientTree, v: &CoefficientTree) -> Result<GridFunction> {
        let eval = self.evaluate_full(c)?;
        let dparam = self.param_field(v)?;
        let df = dparam.zip_map(&eval.param, |dx, x| dx * self.link.derivative(x));
        match self.kind {
            ModelKind::Identity => Ok(df),
            ModelKind::LinearSmoothing { kappa } => self.smooth(&df, kappa),
            ModelKind::Darcy { .. } => {
                let faces = self.faces();
                let (op, _) = self.pde_operator(&faces, eval.coefficient.values());
                let (d_interior, d_boundary) = faces.face_average(df.values());
                let d_op = EllipticOperator {
                    faces: &faces,
                    interior: d_interior,
                    boundary: d_boundary,
                    mass: None,
                    dim: self.basis.dim,
                };
                let rhs: Vec<f64> = d_op
                    .apply(eval.output.values())
                    .iter()
                    .map(|v| -v)
                    .collect();
                GridFunction::from_values(df.dim(), df.level(), op.solve(&rhs)?.u)
            }
            ModelKind::Schroedinger { .. } => {
                let faces = self.faces();
                let (op, _) = self.pde_operator(&faces, eval.coefficient.values());
                let rhs: Vec<f64> = df
                    .values()
                    .iter()
                    .zip(eval.output.values())
                    .map(|(a, b)| -a * b)
                    .collect();
                GridFunction::from_values(df.dim(), df.level(), op.solve(&rhs)?.u)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tree(basis: &WaveletBasis, scale: f64, rng: &mut ChaCha8Rng) -> CoefficientTree {
        let t = CoefficientTree::zeros(basis);
        let w = t.level_weights(|k| 2f64.powf(-2.0 * k as f64));
        CoefficientTree::from_vec(
            basis,
            w.iter()
                .map(|w| scale * w * rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_gradient_is_analysis() {
        let basis = WaveletBasis::new(Family::Daubechies(2), 1, 5).unwrap();
        let model = ForwardModel::identity(basis);
        let r = GridFunction::from_fn(1, 5, |x| (7.0 * x[0]).sin());
        let g = model
            .adjoint_gradient(&CoefficientTree::zeros(&basis), &r)
            .unwrap();
        let want = dwt_forward(&r, &basis).unwrap();
        assert!(g.sub(&want).l2_norm() < 1e-14);
    }

    #[test]
    fn darcy_rejects_nonpositive_conductivity() {
        let basis = WaveletBasis::haar(1, 4).unwrap();
        let model = ForwardModel::new(
            ModelKind::Darcy { source: 2.0 },
            basis,
            LinkFunction::Identity,
            None,
        )
        .unwrap();
        // Identity link: F ≡ 0 gives f ≡ 0.
        let err = model.evaluate(&CoefficientTree::zeros(&basis)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn schroedinger_zero_potential_is_harmonic() {
        for d in 1..=2 {
            let basis = WaveletBasis::haar(d, 4).unwrap();
            let model = ForwardModel::new(
                ModelKind::Schroedinger { boundary: 1.0 },
                basis,
                LinkFunction::Identity,
                None,
            )
            .unwrap();
            let u = model.evaluate(&CoefficientTree::zeros(&basis)).unwrap();
            assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-10), "d={d}");
        }
    }

    #[test]
    fn gradients_match_finite_differences_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [
            ModelKind::Identity,
            ModelKind::LinearSmoothing { kappa: 1.5 },
            ModelKind::Darcy { source: 2.0 },
            ModelKind::Schroedinger { boundary: 1.0 },
        ] {
            for d in 1..=2 {
                let basis = WaveletBasis::new(Family::Daubechies(2), d, if d == 1 { 6 } else { 3 })
                    .unwrap();
                let link = if kind.is_pde() {
                    LinkFunction::RegularSoftplus { k_min: 0.1 }
                } else {
                    LinkFunction::Identity
                };
                let model =
                    ForwardModel::new(kind, basis, link, Some(CutoffSpec::default())).unwrap();
                let c = random_tree(&basis, 1.0, &mut rng);
                let v = random_tree(&basis, 1.0, &mut rng);
                let r = GridFunction::from_fn(d, basis.max_level, |x| {
                    (3.0 * x[0]).cos() + x.len() as f64 * 0.1
                });
                let g = model.adjoint_gradient(&c, &r).unwrap();
                let h = 1e-5;
                let plus = model.evaluate(&c.axpy(h, &v)).unwrap().inner(&r);
                let minus = model.evaluate(&c.axpy(-h, &v)).unwrap().inner(&r);
                let fd = (plus - minus) / (2.0 * h);
                let ad = g.dot(&v);
                assert!(
                    (fd - ad).abs() <= 1e-6 * ad.abs().max(1e-8),
                    "{kind:?} d={d}: fd {fd} vs {ad}"
                );
                let tangent = model.linearized(&c, &v).unwrap().inner(&r);
                assert!(
                    (tangent - ad).abs() <= 1e-10 * ad.abs().max(1e-12),
                    "{kind:?} d={d}: {tangent} vs {ad}"
                );
            }
        }
    }
}
