//! The mixed Gamma-Weibull family and its nested special cases.
//!
//! Every candidate model is represented by the same five-parameter vector
//! [`MgwParams`]; the exponential, Gamma, Weibull, mixed exponential, MEW and
//! MGE families are masks on it (see [`Family`]).
//!
//! The density is `p·g₁(x | α, β) + (1 − p)·g₂(x | k, λ)` with `g₁` the Gamma
//! density (shape α, scale β) and `g₂` the Weibull density (shape k, scale λ).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{gamma_p, ln_gamma_unchecked};

/// Five-parameter vector (p, α, β, k, λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgwParams {
    /// Weight of the Gamma component.
    pub p: f64,
    /// Gamma shape.
    pub alpha: f64,
    /// Gamma scale (mm).
    pub beta: f64,
    /// Weibull shape.
    pub k: f64,
    /// Weibull scale (mm).
    pub lambda: f64,
}

impl MgwParams {
    pub fn new(p: f64, alpha: f64, beta: f64, k: f64, lambda: f64) -> Result<Self> {
        let params = Self { p, alpha, beta, k, lambda };
        params.validate()?;
        Ok(params)
    }

    /// Single exponential with the given mean, stored as a pure Gamma with α = k = 1, β = λ.
    pub fn exponential(mean: f64) -> Self {
        Self { p: 1.0, alpha: 1.0, beta: mean, k: 1.0, lambda: mean }
    }

    /// Pure Gamma (p = 1). The Weibull slot is filled with the matching exponential.
    pub fn gamma(alpha: f64, beta: f64) -> Self {
        Self { p: 1.0, alpha, beta, k: 1.0, lambda: alpha * beta }
    }

    /// Pure Weibull (p = 0). The Gamma slot is filled with an exponential of scale λ.
    pub fn weibull(k: f64, lambda: f64) -> Self {
        Self { p: 0.0, alpha: 1.0, beta: lambda, k, lambda }
    }

    pub fn mixed_exponential(p: f64, beta: f64, lambda: f64) -> Self {
        Self { p, alpha: 1.0, beta, k: 1.0, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.p)
            && self.alpha > 0.0
            && self.beta > 0.0
            && self.k > 0.0
            && self.lambda > 0.0
            && self.alpha.is_finite()
            && self.beta.is_finite()
            && self.k.is_finite()
            && self.lambda.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{self:?}")))
        }
    }

    /// Variance of the Gamma component, αβ².
    pub fn gamma_component_variance(&self) -> f64 {
        self.alpha * self.beta * self.beta
    }

    /// Variance of the Weibull component, λ²[Γ(1+2/k) − Γ(1+1/k)²].
    pub fn weibull_component_variance(&self) -> f64 {
        let g1 = gamma_fn(1.0 + 1.0 / self.k);
        let g2 = gamma_fn(1.0 + 2.0 / self.k);
        self.lambda * self.lambda * (g2 - g1 * g1)
    }
}

/// Tag for the model families nested in the MGW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Exponential,
    Gamma,
    Weibull,
    MixedExponential,
    Mgw,
    /// Mixed exponential-Weibull, α = 1.
    Mew,
    /// Mixed Gamma-exponential, k = 1.
    Mge,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Exponential => "Exponential",
            Family::Gamma => "Gamma",
            Family::Weibull => "Weibull",
            Family::MixedExponential => "Mixed Exponential",
            Family::Mgw => "MGW",
            Family::Mew => "MEW",
            Family::Mge => "MGE",
        }
    }

    /// Whether `params` satisfies this family's constraints to within `tol`.
    pub fn admits(&self, params: &MgwParams, tol: f64) -> bool {
        let one = |v: f64| (v - 1.0).abs() <= tol;
        match self {
            Family::Exponential => {
                one(params.alpha) && one(params.k) && (params.beta - params.lambda).abs() <= tol * params.beta
            }
            Family::Gamma => one(params.p),
            Family::Weibull => params.p.abs() <= tol,
            Family::MixedExponential => one(params.alpha) && one(params.k),
            Family::Mew => one(params.alpha),
            Family::Mge => one(params.k),
            Family::Mgw => true,
        }
    }
}

/// Coarse shape of a density on (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PdfShape {
    MonotoneDecreasing,
    Unimodal,
    Other,
}

/// First two moments and the Var/E² statistic (named CV throughout, after
/// its role in the moment constraints, although it is the squared
/// coefficient of variation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub cv_stat: f64,
}

impl Moments {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance, cv_stat: variance / (mean * mean) }
    }
}

pub(crate) fn gamma_fn(x: f64) -> f64 {
    ln_gamma_unchecked(x).exp()
}

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Per-parameter constants hoisted out of per-observation loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub ln_p: f64,
    pub ln_q: f64,
    pub alpha: f64,
    pub inv_beta: f64,
    pub ln_norm1: f64,
    pub k: f64,
    pub ln_lambda: f64,
    pub ln_k_over_lambda: f64,
}

/// Per-observation component terms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Terms {
    /// ln p + ln g₁(x)
    pub a: f64,
    /// ln(1 − p) + ln g₂(x)
    pub b: f64,
    /// ln f(x)
    pub log_f: f64,
    /// (x/λ)^k
    pub t: f64,
}

impl Kernel {
    pub fn new(params: &MgwParams) -> Self {
        let ln_beta = params.beta.ln();
        let ln_lambda = params.lambda.ln();
        Self {
            ln_p: params.p.ln(),
            ln_q: (-params.p).ln_1p(),
            alpha: params.alpha,
            inv_beta: 1.0 / params.beta,
            ln_norm1: -ln_gamma_unchecked(params.alpha) - params.alpha * ln_beta,
            k: params.k,
            ln_lambda,
            ln_k_over_lambda: params.k.ln() - ln_lambda,
        }
    }

    /// (ln g₁(x), ln g₂(x), (x/λ)^k, ln(x/λ)) without the mixing step.
    #[inline]
    pub fn parts(&self, x: f64, ln_x: f64) -> (f64, f64, f64, f64) {
        let lg1 = self.ln_norm1 + (self.alpha - 1.0) * ln_x - x * self.inv_beta;
        let ln_ratio = ln_x - self.ln_lambda;
        let t = (self.k * ln_ratio).exp();
        let lg2 = self.ln_k_over_lambda + (self.k - 1.0) * ln_ratio - t;
        (lg1, lg2, t, ln_ratio)
    }

    #[inline]
    pub fn terms(&self, x: f64, ln_x: f64) -> Terms {
        let (lg1, lg2, t, _) = self.parts(x, ln_x);
        let a = if self.ln_p == f64::NEG_INFINITY { f64::NEG_INFINITY } else { self.ln_p + lg1 };
        let b = if self.ln_q == f64::NEG_INFINITY { f64::NEG_INFINITY } else { self.ln_q + lg2 };
        Terms { a, b, log_f: log_add_exp(a, b), t }
    }

    #[inline]
    pub fn log_pdf(&self, x: f64, ln_x: f64) -> f64 {
        self.terms(x, ln_x).log_f
    }
}

/// Density of the mixture at `x > 0`.
pub fn mgw_pdf(x: f64, params: &MgwParams) -> Result<f64> {
    mgw_log_pdf(x, params).map(f64::exp)
}

/// Log-density of the mixture at `x > 0`.
pub fn mgw_log_pdf(x: f64, params: &MgwParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("mgw_pdf", x));
    }
    params.validate()?;
    Ok(Kernel::new(params).log_pdf(x, x.ln()))
}

/// Σ ln f(xᵢ), accumulated in log space.
pub fn log_likelihood(xs: &[f64], params: &MgwParams) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::SampleTooSmall { needed: 1, got: 0 });
    }
    params.validate()?;
    let kernel = Kernel::new(params);
    let mut total = 0.0;
    for &x in xs {
        if !(x > 0.0) {
            return Err(Error::NonPositiveObservation(x));
        }
        total += kernel.log_pdf(x, x.ln());
    }
    Ok(total)
}

/// Mean, variance and Var/E² of the mixture.
pub fn mgw_moments(params: &MgwParams) -> Result<Moments> {
    params.validate()?;
    let MgwParams { p, alpha, beta, k, lambda } = *params;
    let g1 = gamma_fn(1.0 + 1.0 / k);
    let g2 = gamma_fn(1.0 + 2.0 / k);
    let mean = p * alpha * beta + (1.0 - p) * lambda * g1;
    let second = p * alpha * (alpha + 1.0) * beta * beta + (1.0 - p) * lambda * lambda * g2;
    Ok(Moments::new(mean, second - mean * mean))
}

/// Inverse of the Gamma skewness map γ = 2/√α.
pub fn gamma_skewness_to_alpha(skewness: f64) -> Result<f64> {
    if !(skewness > 0.0) || !skewness.is_finite() {
        return Err(domain("gamma_skewness_to_alpha", skewness));
    }
    let r = 2.0 / skewness;
    Ok(r * r)
}

/// Standardized third moment of a Weibull with shape `k`.
pub fn weibull_skewness(k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(domain("weibull_skewness", k));
    }
    Ok(weibull_skewness_unchecked(k))
}

fn weibull_skewness_unchecked(k: f64) -> f64 {
    // Ratios to Γ(1+1/k)^j keep the numerator O(1) for small k.
    let l1 = ln_gamma_unchecked(1.0 + 1.0 / k);
    let r2 = (ln_gamma_unchecked(1.0 + 2.0 / k) - 2.0 * l1).exp();
    let r3 = (ln_gamma_unchecked(1.0 + 3.0 / k) - 3.0 * l1).exp();
    let var = r2 - 1.0;
    (r3 - 3.0 * r2 + 2.0) / (var * var.sqrt())
}

const WEIBULL_K_MIN: f64 = 0.05;
/// Shape at which the Weibull skewness changes sign.
const WEIBULL_K_SYMMETRIC: f64 = 3.602_349_425_719_3;

/// Weibull shape whose skewness equals `skewness`.
///
/// Skewness is strictly decreasing in k on (0, 3.6023), so any positive
/// target in range has a unique root there. Skewness 2 maps to exactly
/// k = 1; larger skewness gives k < 1.
pub fn weibull_skewness_to_k(skewness: f64) -> Result<f64> {
    if !(skewness > 0.0) || !skewness.is_finite() {
        return Err(domain("weibull_skewness_to_k", skewness));
    }
    if (skewness - 2.0).abs() <= 1e-9 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = if skewness > 2.0 { (WEIBULL_K_MIN, 1.0) } else { (1.0, WEIBULL_K_SYMMETRIC) };
    if skewness > weibull_skewness_unchecked(WEIBULL_K_MIN) {
        return Err(domain("weibull_skewness_to_k", skewness));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if weibull_skewness_unchecked(mid) > skewness {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Quantile of Gamma(α, β) at probability `u`, by bisection on ln x.
pub(crate) fn gamma_quantile(alpha: f64, beta: f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (-745.0f64, 710.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cdf = gamma_p(alpha, mid.exp()).unwrap_or(1.0);
        if cdf < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    beta * (0.5 * (lo + hi)).exp()
}

pub(crate) fn weibull_quantile(k: f64, lambda: f64, u: f64) -> f64 {
    lambda * (-(-u).ln_1p()).powf(1.0 / k)
}

const SHAPE_GRID_POINTS: usize = 2048;
const SHAPE_TAIL: f64 = 1e-6;
const SHAPE_SLOPE_TOL: f64 = 1e-10;

/// Interval [q, Q] covering the 1e-6 and 1 − 1e-6 quantiles of every
/// component with positive weight.
pub fn shape_diagnosis_range(params: &MgwParams) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    if params.p > 0.0 {
        lo = lo.min(gamma_quantile(params.alpha, params.beta, SHAPE_TAIL));
        hi = hi.max(gamma_quantile(params.alpha, params.beta, 1.0 - SHAPE_TAIL));
    }
    if params.p < 1.0 {
        lo = lo.min(weibull_quantile(params.k, params.lambda, SHAPE_TAIL));
        hi = hi.max(weibull_quantile(params.k, params.lambda, 1.0 - SHAPE_TAIL));
    }
    (lo.max(f64::MIN_POSITIVE), hi)
}

/// d/dx ln f(x).
pub fn mgw_log_pdf_slope(x: f64, params: &MgwParams) -> f64 {
    let kernel = Kernel::new(params);
    log_pdf_slope(&kernel, params, x)
}

fn log_pdf_slope(kernel: &Kernel, params: &MgwParams, x: f64) -> f64 {
    let terms = kernel.terms(x, x.ln());
    let mut slope = 0.0;
    if terms.a > f64::NEG_INFINITY {
        let w1 = (terms.a - terms.log_f).exp();
        slope += w1 * ((params.alpha - 1.0) / x - 1.0 / params.beta);
    }
    if terms.b > f64::NEG_INFINITY {
        let w2 = (terms.b - terms.log_f).exp();
        slope += w2 * ((params.k - 1.0) - params.k * terms.t) / x;
    }
    slope
}

/// Classifies the density as monotone decreasing, unimodal or neither by the
/// sign pattern of d/dx ln f on a geometric grid.
pub fn classify_pdf_shape(params: &MgwParams) -> PdfShape {
    let (lo, hi) = shape_diagnosis_range(params);
    let kernel = Kernel::new(params);
    let ratio = (hi / lo).ln() / (SHAPE_GRID_POINTS - 1) as f64;
    let mut last_sign = 0i8;
    let mut changes = 0usize;
    let mut first_sign = 0i8;
    for i in 0..SHAPE_GRID_POINTS {
        let x = lo * (ratio * i as f64).exp();
        let slope = log_pdf_slope(&kernel, params, x);
        let sign = if slope > SHAPE_SLOPE_TOL {
            1
        } else if slope < -SHAPE_SLOPE_TOL {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if first_sign == 0 {
            first_sign = sign;
        } else if sign != last_sign {
            changes += 1;
        }
        last_sign = sign;
    }
    match (first_sign, changes) {
        (0, _) | (-1, 0) => PdfShape::MonotoneDecreasing,
        (1, 1) => PdfShape::Unimodal,
        _ => PdfShape::Other,
    }
}

/// `n` draws by hierarchical simulation: a Bernoulli(p) draw picks the
/// component, then the amount is drawn from it. Deterministic in `seed`.
pub fn sample_mgw(params: &MgwParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_mgw_with(params, n, &mut rng)
}

pub fn sample_mgw_with<R: Rng + ?Sized>(params: &MgwParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    params.validate()?;
    let gamma = Gamma::new(params.alpha, params.beta).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let weibull = Weibull::new(params.lambda, params.k).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let from_gamma = rng.random::<f64>() < params.p;
        let x = if from_gamma { gamma.sample(rng) } else { weibull.sample(rng) };
        // Shapes far below one can underflow to zero; redraw those.
        if x > 0.0 && x.is_finite() {
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pdf_examples() {
        let e = (-1.0f64).exp();
        let exp1 = MgwParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(close(mgw_pdf(1.0, &exp1).unwrap(), e, 1e-15));
        let weib = MgwParams::new(0.0, 1.0, 1.0, 2.0, 2.0).unwrap();
        assert!(close(mgw_pdf(2.0, &weib).unwrap(), e, 1e-15));
        let mix = MgwParams::new(0.5, 1.0, 1.0, 1.0, 2.0).unwrap();
        let hand = 0.5 * e + 0.25 * (-0.5f64).exp();
        assert!(close(mgw_pdf(1.0, &mix).unwrap(), hand, 1e-15));
        assert!(close(hand, 0.335_572, 1e-6));
        assert!(mgw_pdf(0.0, &mix).is_err());
        assert!(mgw_pdf(-1.0, &mix).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MgwParams::new(1.2, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(MgwParams::new(0.5, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(MgwParams::new(0.5, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(MgwParams::new(0.5, 1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let e1 = MgwParams::exponential(1.0);
        assert!(close(log_likelihood(&[1.0, 1.0], &e1).unwrap(), -2.0, 1e-14));
        let e4 = MgwParams::exponential(4.0);
        let ll = log_likelihood(&[2.0, 4.0, 6.0], &e4).unwrap();
        assert!(close(ll, -3.0 * 4f64.ln() - 3.0, 1e-12));
        assert!(close(ll, -7.15888, 1e-5));
        assert!(log_likelihood(&[], &e4).is_err());
        assert!(log_likelihood(&[1.0, 0.0], &e4).is_err());
    }

    #[test]
    fn moments_examples() {
        let m = mgw_moments(&MgwParams::gamma(2.0, 3.0)).unwrap();
        assert!(close(m.mean, 6.0, 1e-12) && close(m.variance, 18.0, 1e-10));
        let m = mgw_moments(&MgwParams::weibull(1.0, 5.0)).unwrap();
        assert!(close(m.mean, 5.0, 1e-12) && close(m.variance, 25.0, 1e-10));
        let m = mgw_moments(&MgwParams::new(0.5, 1.0, 2.0, 1.0, 4.0).unwrap()).unwrap();
        assert!(close(m.mean, 3.0, 1e-12) && close(m.variance, 11.0, 1e-10));
        assert!(close(m.cv_stat, 11.0 / 9.0, 1e-12));
    }

    #[test]
    fn skewness_maps() {
        assert_eq!(gamma_skewness_to_alpha(2.0).unwrap(), 1.0);
        assert_eq!(gamma_skewness_to_alpha(4.0).unwrap(), 0.25);
        assert!(close(gamma_skewness_to_alpha(2.21).unwrap(), 0.8190, 5e-5));
        assert!(gamma_skewness_to_alpha(0.0).is_err());

        assert!(close(weibull_skewness(1.0).unwrap(), 2.0, 1e-12));
        let s = weibull_skewness(0.9560).unwrap();
        assert!((2.0..=2.2).contains(&s), "{s}");
        assert!(weibull_skewness(3.6023).unwrap().abs() < 1e-3);
        assert!(weibull_skewness(0.0).is_err());

        assert_eq!(weibull_skewness_to_k(2.0).unwrap(), 1.0);
        let k = weibull_skewness_to_k(weibull_skewness(0.7).unwrap()).unwrap();
        assert!(close(k, 0.7, 1e-6));
        assert!(weibull_skewness_to_k(-1.0).is_err());
        assert!(weibull_skewness_to_k(1e11).is_err());
        // skewness below two maps to k above one
        assert!(weibull_skewness_to_k(1.5).unwrap() > 1.0);
    }

    #[test]
    fn shape_examples() {
        assert_eq!(classify_pdf_shape(&MgwParams::gamma(0.5, 3.0)), PdfShape::MonotoneDecreasing);
        assert_eq!(classify_pdf_shape(&MgwParams::gamma(1.0, 3.0)), PdfShape::MonotoneDecreasing);
        assert_eq!(classify_pdf_shape(&MgwParams::gamma(2.0, 3.0)), PdfShape::Unimodal);
        assert_eq!(classify_pdf_shape(&MgwParams::weibull(0.8, 3.0)), PdfShape::MonotoneDecreasing);
        assert_eq!(classify_pdf_shape(&MgwParams::weibull(1.5, 3.0)), PdfShape::Unimodal);
        let spike = MgwParams::new(0.5, 30.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(classify_pdf_shape(&spike), PdfShape::Other);
    }

    #[test]
    fn quantiles_invert_cdfs() {
        for &(a, b) in &[(0.2, 3.0), (1.0, 2.0), (30.0, 1.0)] {
            for &u in &[1e-6, 0.5, 1.0 - 1e-6] {
                let x = gamma_quantile(a, b, u);
                assert!(close(gamma_p(a, x / b).unwrap(), u, 1e-9));
            }
        }
        let x = weibull_quantile(0.8, 5.0, 0.3);
        assert!(close(1.0 - (-(x / 5.0f64).powf(0.8)).exp(), 0.3, 1e-12));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let params = MgwParams::new(0.4, 0.7, 3.0, 0.9, 6.0).unwrap();
        let a = sample_mgw(&params, 100, 7).unwrap();
        let b = sample_mgw(&params, 100, 7).unwrap();
        let c = sample_mgw(&params, 100, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&x| x > 0.0));
    }
}
