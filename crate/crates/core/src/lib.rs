//! Mixed-frequency GDP nowcasting toolkit.
//!
//! The crate is organised around the stages of a nowcasting pipeline:
//!
//! - [`series`]: frequency-tagged series, calendar arithmetic, transforms and
//!   pseudo-real-time vintages built from an announcement calendar.
//! - [`impute`]: AR tail filling and iterative random-forest head filling.
//! - [`trees`], [`linear`]: bridge-equation estimators (CART, random forest,
//!   gradient boosting, OLS, Lasso).
//! - [`statespace`], [`dfm`], [`bvar`]: the dynamic factor model and the
//!   mixed-frequency Bayesian VAR.
//! - [`combine`], [`evaluate`]: nowcast combination and the evaluation harness.
//! - [`txn`], [`synth`]: transaction-level activity indices and synthetic data.

pub mod bvar;
pub mod combine;
pub mod dfm;
pub mod error;
pub mod evaluate;
pub mod impute;
pub mod linalg;
pub mod linear;
pub mod series;
pub mod statespace;
pub mod synth;
pub mod trees;
pub mod txn;

pub use error::{Error, Result};
