//! Separable temporal network models with time-varying coefficients,
//! smooth actor-specific random curves, functional principal component
//! analysis and simulation-based evaluation.
//!
//! A dynamic directed network is modelled one step at a time: dyads that
//! were empty may *form*, dyads that carried an edge may *persist*, and the
//! two processes are fitted as independent penalized logistic models on the
//! lagged network. Coefficients are P-spline curves in time, actor
//! heterogeneity enters as shrunken per-actor curves, and smoothing levels
//! are chosen by a restricted-likelihood criterion.
//!
//! ## Library map
//!
//! - [`panel`] — CSV ingestion, imputation, binarization, window aggregation
//! - [`transition`] — formation/persistence row sets per step
//! - [`stats`] — dyadic change statistics and whole-network summaries
//! - [`splines`] — B-spline bases, difference penalties, design blocks
//! - [`fit`] — model specs, penalized IRLS, smoothing selection, curves
//! - [`fpca`] — functional principal components of fitted actor curves
//! - [`eval`] — rolling prediction, exact ROC/PR areas, simulation GOF
//! - [`synth`] — synthetic fixture generator with known ground truth
//! - [`pipeline`] — batch stages behind the `stergm` binary
//!
//! ## Runnable examples
//!
//! Each major capability has a self-contained example:
//!
//! ```text
//! cargo run --example synthetic_panel      # generate a fixture, inspect it
//! cargo run --example ingest_csv           # CSV ingestion, thresholds, windows
//! cargo run --example network_statistics   # dyadic and global statistics
//! cargo run --example penalized_fit        # penalized logistic estimation
//! cargo run --example coefficient_curves   # time-varying coefficient recovery
//! cargo run --example random_effect_fpca   # actor curves and their components
//! cargo run --example rolling_auc          # rolling out-of-sample scoring
//! cargo run --example simulation_gof       # replicate simulation vs observed
//! cargo run --example model_ladder         # the seven model variants compared
//! ```
//!
//! The same functionality is scriptable through the thin `stergm` binary;
//! see the repository README for the subcommand reference.

pub mod error;
pub mod eval;
pub mod fit;
pub mod fpca;
pub mod network;
pub mod panel;
pub mod pipeline;
pub mod plot;
pub mod splines;
pub mod stats;
pub mod synth;
pub mod transition;

pub use error::{Error, Result};
