//! Experiment driver: truths, exact exponents, rate sweeps and prior comparison.

pub mod compare;
pub mod config;
pub mod exponents;
pub mod output;
pub mod sweep;
pub mod truth;

pub use compare::{compare_priors, CompareReport};
pub use config::ExperimentConfig;
pub use exponents::{theoretical_exponents, ExponentModel, Exponents};
pub use sweep::{delta_eps, level_for, run_rate_sweep, RateFit, RateRecord, SweepResult};
pub use truth::{make_truth, Truth, TruthCertificate, TruthSpec};
