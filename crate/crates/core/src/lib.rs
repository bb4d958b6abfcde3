//! Closed-form nonlinear Wiener filtering in an explicit Gaussian feature space.
//!
//! Windows of a scalar series are mapped through a truncated Taylor expansion
//! of the Gaussian kernel ([`featuremap`]). The second moments of those
//! feature vectors ([`correntropy`]) and their cross-correlation with the
//! desired signal give the optimal weights in one linear solve ([`fwf`]).
//! [`baselines`] holds the linear Wiener filter and the kernel adaptive
//! filters it is compared against, [`datagen`] the benchmark signals and
//! [`bench`] the experiment harness behind the `fwf` command line tool.

pub mod baselines;
pub mod bench;
pub mod correntropy;
pub mod datagen;
mod error;
pub mod featuremap;
pub mod format;
pub mod fwf;
pub mod linalg;
pub mod par;
mod predictor;

pub use error::{Error, Result};
pub use featuremap::FeatureMapSpec;
pub use fwf::{FitOptions, FwfModel, ModeSet};
pub use par::Execution;
pub use predictor::{mse, Predictor};
