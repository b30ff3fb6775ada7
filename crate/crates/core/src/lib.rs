//! Multi-level logistic-regression toolkit for manufacturing failure
//! detection.
//!
//! - [`dataio`]: tabular data with NA masks, CSV IO, one-hot encoding,
//!   time-on-line, undersampling and a synthetic generator
//! - [`metrics`]: confusion matrix, MCC, ROC/AUC, threshold sweeps
//! - [`gbt`]: second-order gradient-boosted trees with gain importance
//! - [`lasso`]: L1 logistic regression by cyclical coordinate descent
//! - [`cluster`]: k-means on missingness masks, elbow curves, imputation
//! - [`bayes`]: Bayesian logistic regression by adaptive Metropolis
//! - [`stack`]: two-level stacking with out-of-fold covariates
//! - [`reliability`]: Weibull lifetimes with a linear scale model
//! - [`pipeline`] and [`plot`]: config-driven experiment runs and SVG output

pub mod bayes;
pub mod cluster;
pub mod dataio;
pub mod error;
pub mod gbt;
pub mod lasso;
pub mod math;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod reliability;
pub mod rng;
pub mod stack;

pub use error::{Error, Result};
