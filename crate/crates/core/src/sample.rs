//! Observation vectors collapsed to distinct values with multiplicities.
//!
//! Gauge amounts are recorded at 0.1 mm resolution, so a month of wet days
//! usually holds far fewer distinct values than observations. Every
//! likelihood pass in the estimators runs over the distinct values only.

use serde::{Deserialize, Serialize};

use crate::distributions::{Kernel, MgwParams};
use crate::error::{Error, Result};

/// Divisor used for the sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceDivisor {
    /// n − 1
    #[default]
    Unbiased,
    /// n
    Biased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    ln_values: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
    mean: f64,
    sum_sq_dev: f64,
    mean_ln: f64,
}

impl Sample {
    /// Builds a sample from strictly positive, finite amounts.
    pub fn new(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::SampleTooSmall { needed: 1, got: 0 });
        }
        if let Some(&bad) = xs.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::NonPositiveObservation(bad));
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for x in sorted {
            match values.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += 1.0,
                _ => {
                    values.push(x);
                    weights.push(1.0);
                }
            }
        }
        let n = xs.len();
        let nf = n as f64;
        let mean = values.iter().zip(&weights).map(|(x, w)| w * x).sum::<f64>() / nf;
        let sum_sq_dev = values.iter().zip(&weights).map(|(x, w)| w * (x - mean) * (x - mean)).sum::<f64>();
        let ln_values: Vec<f64> = values.iter().map(|x| x.ln()).collect();
        let mean_ln = ln_values.iter().zip(&weights).map(|(l, w)| w * l).sum::<f64>() / nf;
        Ok(Self { values, ln_values, weights, n, mean, sum_sq_dev, mean_ln })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct values.
    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn mean_ln(&self) -> f64 {
        self.mean_ln
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn variance(&self, divisor: VarianceDivisor) -> f64 {
        match divisor {
            VarianceDivisor::Unbiased if self.n > 1 => self.sum_sq_dev / (self.n - 1) as f64,
            VarianceDivisor::Unbiased => 0.0,
            VarianceDivisor::Biased => self.sum_sq_dev / self.n as f64,
        }
    }

    /// Var/E² with the chosen variance divisor.
    pub fn cv_stat(&self, divisor: VarianceDivisor) -> f64 {
        self.variance(divisor) / (self.mean * self.mean)
    }

    /// Σ ln f(xᵢ) in log space. `params` must already be valid.
    pub fn log_likelihood(&self, params: &MgwParams) -> f64 {
        let kernel = Kernel::new(params);
        self.values
            .iter()
            .zip(&self.ln_values)
            .zip(&self.weights)
            .map(|((&x, &lx), &w)| w * kernel.log_pdf(x, lx))
            .sum()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().zip(&self.ln_values).zip(&self.weights).map(|((&x, &lx), &w)| (x, lx, w))
    }
}
