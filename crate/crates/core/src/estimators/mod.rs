//! Estimators for the MGW family and its nested models.
//!
//! - [`simple`]: closed-form and one-dimensional ML for the exponential,
//!   Gamma and Weibull.
//! - [`mixed_exp`]: EM for the two-component exponential mixture.
//! - [`mixture`]: the moment-constrained grid search ("mixture estimation").
//! - [`mgw_ml`]: full five-parameter ML by EM on (p, β, λ) nested in a
//!   gradient iteration on (α, k), from twelve starting points.

pub mod mgw_ml;
pub mod mixed_exp;
pub mod mixture;
pub mod simple;

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, MgwParams};

pub use mgw_ml::{fit_mgw_ml, MgwCandidate, MlConfig, PriorFits};
pub use mixed_exp::fit_mixed_exponential_em;
pub use mixture::{mixture_estimate_mgw, MixtureGridSpec};
pub use simple::{fit_exponential_ml, fit_gamma_ml, fit_weibull_ml};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MaximumLikelihood,
    MixtureEstimation,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::MaximumLikelihood => "ML estimation",
            Method::MixtureEstimation => "mixture estimation",
        }
    }
}

/// Estimates that landed on a nested sub-model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degeneracy {
    /// Mixed exponential collapsed to a single exponential (β = λ).
    #[serde(rename = "a")]
    MixedExpToExp,
    /// Mixture estimate with k = 1 (an MGE).
    #[serde(rename = "b1")]
    MixtureToMge,
    /// Mixture estimate with α = 1 (an MEW).
    #[serde(rename = "b2")]
    MixtureToMew,
    /// Mixture estimate with α = k = 1 (a mixed exponential).
    #[serde(rename = "b3")]
    MixtureToMixedExp,
    /// MGW ML weight on the boundary: Gamma or Weibull alone.
    #[serde(rename = "c")]
    MgwMlToSingle,
}

impl Degeneracy {
    pub fn code(&self) -> &'static str {
        match self {
            Degeneracy::MixedExpToExp => "a",
            Degeneracy::MixtureToMge => "b1",
            Degeneracy::MixtureToMew => "b2",
            Degeneracy::MixtureToMixedExp => "b3",
            Degeneracy::MgwMlToSingle => "c",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Some(match code {
            "a" => Degeneracy::MixedExpToExp,
            "b1" => Degeneracy::MixtureToMge,
            "b2" => Degeneracy::MixtureToMew,
            "b3" => Degeneracy::MixtureToMixedExp,
            "c" => Degeneracy::MgwMlToSingle,
            _ => return None,
        })
    }
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub family: Family,
    pub method: Method,
    pub params: MgwParams,
    pub log_lik: f64,
    pub n: usize,
    pub degeneracy: Option<Degeneracy>,
    /// Mixture estimate with p̂ ∈ {0, 1}; no LRT is run against it.
    #[serde(default)]
    pub at_boundary: bool,
    pub iterations: usize,
    pub converged: bool,
}

impl Fit {
    /// "Gamma (ML estimation)", "MGE (mixture estimation)" and so on.
    pub fn label(&self) -> String {
        format!("{} ({})", self.family.name(), self.method.label())
    }
}
