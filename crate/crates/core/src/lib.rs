//! # swreg
//!
//! Fast estimation of Wasserstein distances for many pairs of discrete
//! measures. A handful of pairs are labeled with exact optimal transport, a
//! linear model is fitted on sliced Wasserstein lower bounds (SW, Max-SW,
//! EBSW) and lifted upper bounds (PW, Min-SWGG, EST), and every other pair is
//! predicted from its sliced features alone.
//!
//! ## Layout
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measures`] | discrete measures, datasets, manifest loading, pair sampling |
//! | [`sampling`] | seeded RNG streams and uniform directions on the sphere |
//! | [`ot1d`] | projection, 1D quantile transport, lifted cost |
//! | [`exact`] | network simplex solver and a permutation brute force |
//! | [`sliced`] | the six sliced predictors and feature evaluation |
//! | [`regression`] | unconstrained and constrained fits, model files |
//! | [`experiments`] | mixtures, metrics, k-NN, pairwise matrices, sweeps |
//!
//! Costs travel in p-power form (`W_p^p`) inside the solvers and estimators;
//! features, labels and predictions are distances (`W_p`).

pub mod error;
pub mod exact;
pub mod experiments;
pub mod measures;
pub mod ot1d;
pub mod regression;
pub mod sampling;
pub mod sliced;

pub use error::{Error, Result};
pub use exact::{brute_force_wasserstein, exact_wasserstein, ExactOtResult};
pub use measures::{DiscreteMeasure, MeasureDataset, PairIndex, PairMode};
pub use ot1d::{ProjectedMeasure, SparsePlan};
pub use regression::{DesignMatrix, FitReport, RegressionModel};
pub use sampling::{Direction, SeedSpec};
pub use sliced::{FeatureVector, PredictorConfig, PredictorKind, Preset};

