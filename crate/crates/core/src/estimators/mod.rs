//! Point estimators: penalized least squares (MAP) and the conjugate Gaussian
//! posterior mean in the direct model.

mod gaussian;
mod pls;

pub use gaussian::gaussian_posterior_mean;
pub use pls::{
    pls_objective, soft_threshold, solve_map, solve_map_multistart, tau_lambda_sq, EstimateReport,
    PlsConfig, StepRule,
};
