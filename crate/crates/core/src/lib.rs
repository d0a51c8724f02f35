//! Selective aggregation of local false discovery rate estimators.
//!
//! A parametric generator is fitted to the observed statistics and sampled
//! to produce synthetic datasets with known local fdr. Every model in a grid
//! of candidate estimators is scored on those datasets, the best `m` are kept,
//! and their estimates on the observed statistics are averaged with weights
//! `1 − L̂`.
//!
//! ```
//! use fdrsafe::{generator, pipeline, model::StatVector};
//!
//! let truth = generator::GeneratorParams::new(0.8, 1.0, 0.4, 2.0, 2.5).unwrap();
//! let observed = generator::sample_dataset(&truth, 400, 1).unwrap();
//! let u = StatVector::new(observed.u).unwrap();
//!
//! let mut cfg = pipeline::SafeConfig::default();
//! cfg.n_synthetic = 3;
//! cfg.ensemble_size = 4;
//! let result = pipeline::run_fdrsafe(&u, &cfg).unwrap();
//!
//! let total: f64 = result.selected.iter().map(|s| s.weight).sum();
//! assert!((total - 1.0).abs() < 1e-12);
//! assert!(result.fdr.iter().all(|f| (0.0..=1.0).contains(f)));
//! ```

// `!(x > 0.0)` is used deliberately so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod generator;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod seed;
pub mod sim;

pub use error::{Error, FitError, Result, Stage};
pub use model::{FdrFit, NullSpec, StatVector};
