//! Functional sliced inverse regression over a B-spline basis, composed with
//! a one-hidden-layer perceptron, plus baselines and a synthetic harness.
//!
//! The estimation pipeline is: project discretized curves onto a spline
//! basis (`basis`), build the between-slice and penalized covariance
//! operators in coefficient space (`estimators`), solve the regularized
//! generalized eigenproblem for the reduction directions (`edr`), and fit a
//! predictor on the projected scores (`mlp`, `pipeline`). `synth` generates
//! data with known structure to check the estimator's consistency
//! empirically.

// `!(x > 0.0)` is used deliberately throughout: unlike `x <= 0.0`, it also
// rejects NaN. Index loops are kept where one index addresses several
// structures at once, which is constant in this numerical code.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod basis;
pub mod edr;
pub mod error;
pub mod estimators;
pub mod mlp;
pub mod pipeline;
pub mod seeding;
pub mod serialize;
pub mod synth;

pub use error::{Error, Result};
