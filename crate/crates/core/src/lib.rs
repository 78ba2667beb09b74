//! Fitting daily precipitation amounts with the mixed Gamma-Weibull (MGW)
//! family and its nested models, and choosing among them per site and month.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: log-gamma, digamma, trigamma, incomplete gamma, χ² tail.
//! - [`distributions`]: the MGW density, moments, skewness maps, shape
//!   diagnosis and sampling.
//! - [`sample`]: observation vectors collapsed to distinct values.
//! - [`estimators`]: ML for every family, the moment-constrained grid
//!   estimator and multistart MGW ML.
//! - [`selection`]: likelihood-ratio tests, AIC and the final model choice.
//! - [`pipeline`]: CSV ingestion, wet-day filtering, grouping by month.
//! - [`report`]: run configuration, JSON output, text tables and the CLI
//!   commands.
//!
//! ```
//! use mgw_precip::{estimators, Sample};
//!
//! let xs = [0.05, 0.35, 1.15, 2.05, 4.95, 9.95, 0.15, 3.05];
//! let sample = Sample::new(&xs).unwrap();
//! let fit = estimators::fit_gamma_ml(&sample).unwrap();
//! assert!(fit.params.alpha > 0.0);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod pipeline;
pub mod report;
pub mod sample;
pub mod selection;
pub mod special;

pub use distributions::{Family, MgwParams, PdfShape};
pub use error::{Error, Result};
pub use estimators::{Degeneracy, Fit, Method};
pub use sample::{Sample, VarianceDivisor};
