//! Empirical check of the local Lipschitz bound `‖G(F₁)−G(F₂)‖ ≤ C_R ‖F₁−F₂‖_{(H^κ)*}`.

use rand::Rng;
use serde::Serialize;

use super::ForwardModel;
use crate::error::{invalid, Result};
use crate::prior::standard_laplace;
use crate::seeding;
use crate::wavelet::{dwt_inverse, seq_norm, CoefficientTree, SeqNorm};

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzStats {
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Draws `trials` pairs of random trees whose synthesized sup norm is at most
/// `radius` and reports `‖G(F₁)−G(F₂)‖ / ‖F₁−F₂‖_{NegSobolev(κ)}`.
///
/// Pairs are smooth Laplace series (decay `2^{-(d/2+2)k}`) rescaled to a
/// random sup norm in `(0, radius]`, so the sup norm stands in for the Hölder
/// ball of the bound.
pub fn lipschitz_probe(
    model: &ForwardModel,
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<LipschitzStats> {
    if !(radius > 0.0 && radius.is_finite()) || trials == 0 {
        return Err(invalid(
            "lipschitz probe needs radius > 0 and at least one trial",
        ));
    }
    let basis = model.basis;
    let kappa = model.kappa();
    let mut rng = seeding::stream_rng(seed, 0);
    let d = basis.dim as f64;
    let weights =
        CoefficientTree::zeros(&basis).level_weights(|k| 2f64.powf(-(d / 2.0 + 2.0) * k as f64));
    let draw = |rng: &mut seeding::Rng| -> Result<CoefficientTree> {
        let c = CoefficientTree::from_vec(
            &basis,
            weights.iter().map(|w| w * standard_laplace(rng)).collect(),
        )?;
        let sup = dwt_inverse(&c, &basis)?.sup_norm();
        let target = radius * rng.random_range(0.05..1.0);
        Ok(if sup > 0.0 { c.scaled(target / sup) } else { c })
    };
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let a = draw(&mut rng)?;
        let b = draw(&mut rng)?;
        let denom = seq_norm(&a.sub(&b), SeqNorm::NegSobolev { kappa })?;
        if denom == 0.0 {
            continue;
        }
        let num = model.evaluate(&a)?.sub(&model.evaluate(&b)?).l2_norm();
        ratios.push(num / denom);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    Ok(LipschitzStats {
        max_ratio,
        mean_ratio,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::ModelKind;
    use crate::prior::LinkFunction;
    use crate::wavelet::{Family, WaveletBasis};

    #[test]
    fn identity_ratio_is_one() {
        let basis = WaveletBasis::new(Family::Daubechies(3), 1, 7).unwrap();
        let stats = lipschitz_probe(&ForwardModel::identity(basis), 1.0, 20, 3).unwrap();
        assert!(stats.ratios.iter().all(|r| (r - 1.0).abs() < 1e-10));
    }

    #[test]
    fn smoothing_ratio_is_one() {
        let basis = WaveletBasis::new(Family::Daubechies(2), 2, 4).unwrap();
        let model = ForwardModel::new(
            ModelKind::LinearSmoothing { kappa: 1.5 },
            basis,
            LinkFunction::Identity,
            None,
        )
        .unwrap();
        let stats = lipschitz_probe(&model, 1.0, 20, 4).unwrap();
        assert!(stats.ratios.iter().all(|r| (r - 1.0).abs() < 1e-10));
    }

    #[test]
    fn darcy_ratio_is_stable() {
        let basis = WaveletBasis::new(Family::Daubechies(2), 1, 6).unwrap();
        let link = LinkFunction::RegularSoftplus { k_min: 0.1 };
        let model = ForwardModel::new(
            ModelKind::Darcy { source: 2.0 },
            basis,
            link,
            Some(Default::default()),
        )
        .unwrap();
        let small = lipschitz_probe(&model, 1.0, 200, 5).unwrap();
        let large = lipschitz_probe(&model, 1.0, 400, 5).unwrap();
        assert!(small.max_ratio.is_finite() && small.max_ratio > 0.0);
        assert!(
            large.max_ratio < 2.0 * small.max_ratio,
            "{} vs {}",
            large.max_ratio,
            small.max_ratio
        );
    }
}
