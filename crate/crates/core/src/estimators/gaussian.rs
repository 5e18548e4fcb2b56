use crate::error::{invalid, Error, Result};
use crate::forward::{ForwardModel, ModelKind};
use crate::observation::Observation;
use crate::prior::{LinkFunction, PriorKind, PriorSpec};
use crate::wavelet::CoefficientTree;

/// Posterior mean under a Gaussian prior in the direct model:
/// `ĉ = y v / (v + ε²)` with prior variance `v = (ρ 2^{(d/2-α)k})²`.
///
/// This is a fixed diagonal linear map of the data.
pub fn gaussian_posterior_mean(
    obs: &Observation,
    model: &ForwardModel,
    prior: &PriorSpec,
) -> Result<CoefficientTree> {
    if model.kind != ModelKind::Identity
        || model.cutoff.is_some()
        || model.link != LinkFunction::Identity
    {
        return Err(Error::UnsupportedModel(
            "conjugate posterior mean needs the identity model without cutoff or link".into(),
        ));
    }
    if prior.kind != PriorKind::GaussianSobolev || prior.cutoff.is_some() {
        return Err(invalid(
            "conjugate posterior mean needs a Gaussian prior without cutoff",
        ));
    }
    prior.validate()?;
    obs.y.check_basis(&prior.basis)?;
    let eps2 = obs.eps * obs.eps;
    let data = obs
        .y
        .as_slice()
        .iter()
        .zip(prior.coefficient_scales())
        .map(|(&y, s)| {
            let v = s * s;
            if v == 0.0 {
                0.0
            } else {
                y * v / (v + eps2)
            }
        })
        .collect();
    CoefficientTree::from_vec(&prior.basis, data)
}
