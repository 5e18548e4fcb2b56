#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod forward;
pub mod grid;
pub mod harness;
pub mod mcmc;
pub mod observation;
pub mod prior;
pub mod seeding;
pub mod wavelet;

pub use error::{Error, Result};
