//! Mixture estimation: moment-constrained grid search over (p, α, k).
//!
//! For each grid point the scale pair (β, λ) is pinned by matching the
//! sample mean and variance, which reduces to a quadratic in the normalized
//! Gamma scale β* = β/x̄. Among all admissible (p, α, k, β*) the one with the
//! largest likelihood wins. Shapes are indexed by skewness: α = (2/γ)² and k
//! solves Weibull skewness(k) = γ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Degeneracy, Fit, Method};
use crate::distributions::{gamma_fn, gamma_skewness_to_alpha, weibull_skewness_to_k, Family, MgwParams};
use crate::error::{Error, Result};
use crate::sample::{Sample, VarianceDivisor};
use crate::special::ln_gamma_unchecked;

/// Grid definition. Steps must divide one evenly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureGridSpec {
    pub p_step: f64,
    pub skew_min: f64,
    pub skew_max: f64,
    pub skew_step: f64,
    pub variance: VarianceDivisor,
}

impl Default for MixtureGridSpec {
    fn default() -> Self {
        Self { p_step: 0.01, skew_min: 2.0, skew_max: 5.0, skew_step: 0.01, variance: VarianceDivisor::Unbiased }
    }
}

/// Tolerance for admitting the p ∈ {0, 1} rows, where the moment match has
/// no free scale left and must hold on a grid shape.
const BOUNDARY_MATCH_TOL: f64 = 1e-9;

fn ticks_per_unit(step: f64) -> Result<u32> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Config(format!("grid step {step} must lie in (0, 1]")));
    }
    let per = (1.0 / step).round();
    if ((1.0 / step) - per).abs() > 1e-6 {
        return Err(Error::Config(format!("grid step {step} does not divide one")));
    }
    Ok(per as u32)
}

impl MixtureGridSpec {
    pub fn validate(&self) -> Result<()> {
        ticks_per_unit(self.p_step)?;
        ticks_per_unit(self.skew_step)?;
        if !(self.skew_min > 0.0 && self.skew_min <= self.skew_max && self.skew_max.is_finite()) {
            return Err(Error::Config(format!("bad skewness range [{}, {}]", self.skew_min, self.skew_max)));
        }
        Ok(())
    }

    /// p = i/N for i = 0..=N.
    pub fn p_values(&self) -> Result<Vec<f64>> {
        let per = ticks_per_unit(self.p_step)?;
        Ok((0..=per).map(|i| i as f64 / per as f64).collect())
    }

    /// γ = t/N for the integer ticks t covering [skew_min, skew_max].
    pub fn skew_values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let per = ticks_per_unit(self.skew_step)? as f64;
        let lo = (self.skew_min * per).round() as i64;
        let hi = (self.skew_max * per).round() as i64;
        Ok((lo..=hi).map(|t| t as f64 / per).collect())
    }
}

/// Admissible solution of the moment constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRoot {
    /// β/x̄
    pub beta_star: f64,
    /// λ/x̄
    pub lambda_star: f64,
}

/// Γ(1+2/k)/Γ(1+1/k)², the Weibull second-moment ratio.
pub fn weibull_moment_ratio(k: f64) -> f64 {
    let l1 = ln_gamma_unchecked(1.0 + 1.0 / k);
    (ln_gamma_unchecked(1.0 + 2.0 / k) - 2.0 * l1).exp()
}

#[derive(Debug, Clone, Copy)]
struct Quadratic {
    a: f64,
    b: f64,
    c: f64,
}

fn quadratic(p: f64, alpha: f64, ratio: f64, cv: f64) -> Quadratic {
    let q = 1.0 - p;
    let pa = p * alpha;
    Quadratic { a: pa * (alpha + 1.0) + pa * pa * ratio / q, b: -2.0 * pa * ratio / q, c: ratio / q - 1.0 - cv }
}

/// Real roots in ascending order, by the cancellation-free formula.
fn real_roots(quad: Quadratic) -> Option<(f64, f64)> {
    let Quadratic { a, b, c } = quad;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    // b < 0 always, so q > 0.
    let q = -0.5 * (b - disc.sqrt());
    let big = q / a;
    let small = c / q;
    Some((small.min(big), small.max(big)))
}

/// Positive roots β* of the moment quadratic, with multiplicity, before the
/// λ* > 0 filter.
pub fn moment_quadratic_positive_roots(p: f64, alpha: f64, k: f64, cv: f64) -> Vec<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Vec::new();
    }
    match real_roots(quadratic(p, alpha, weibull_moment_ratio(k), cv)) {
        Some((r1, r2)) => [r1, r2].into_iter().filter(|&r| r > 0.0).collect(),
        None => Vec::new(),
    }
}

/// Number of positive roots implied by where CV falls relative to the
/// thresholds R/(1−p) − 1 and R/(1−p) − b²/(4a) − 1.
pub fn predicted_positive_root_count(p: f64, alpha: f64, k: f64, cv: f64) -> usize {
    let ratio = weibull_moment_ratio(k);
    let Quadratic { a, b, .. } = quadratic(p, alpha, ratio, cv);
    let upper = ratio / (1.0 - p) - 1.0;
    let lower = upper - b * b / (4.0 * a);
    if cv >= upper {
        1
    } else if cv >= lower {
        2
    } else {
        0
    }
}

/// Admissible (β*, λ*) pairs for interior p, smaller β* first.
pub fn beta_star_roots(p: f64, alpha: f64, k: f64, cv: f64) -> Vec<MomentRoot> {
    if !(p > 0.0 && p < 1.0) || !(alpha > 0.0) || !(k > 0.0) {
        return Vec::new();
    }
    let g1 = gamma_fn(1.0 + 1.0 / k);
    let mut out = [MomentRoot { beta_star: 0.0, lambda_star: 0.0 }; 2];
    let count = admissible_roots(p, alpha, g1, weibull_moment_ratio(k), cv, &mut out);
    out[..count].to_vec()
}

#[inline]
fn admissible_roots(p: f64, alpha: f64, g1: f64, ratio: f64, cv: f64, out: &mut [MomentRoot; 2]) -> usize {
    let Some((r1, r2)) = real_roots(quadratic(p, alpha, ratio, cv)) else {
        return 0;
    };
    let mut count = 0;
    for beta_star in [r1, r2] {
        if beta_star > 0.0 && beta_star * p * alpha < 1.0 {
            let lambda_star = (1.0 - p * alpha * beta_star) / ((1.0 - p) * g1);
            if lambda_star > 0.0 && lambda_star.is_finite() {
                out[count] = MomentRoot { beta_star, lambda_star };
                count += 1;
            }
        }
    }
    count
}

/// Data-independent shape tables.
struct ShapeGrid {
    alphas: Vec<f64>,
    ln_gamma_alphas: Vec<f64>,
    ks: Vec<f64>,
    g1: Vec<f64>,
    ratios: Vec<f64>,
}

impl ShapeGrid {
    fn new(skews: &[f64]) -> Result<Self> {
        let alphas: Vec<f64> = skews.iter().map(|&g| gamma_skewness_to_alpha(g)).collect::<Result<_>>()?;
        let ks: Vec<f64> = skews.iter().map(|&g| weibull_skewness_to_k(g)).collect::<Result<_>>()?;
        Ok(Self {
            ln_gamma_alphas: alphas.iter().map(|&a| ln_gamma_unchecked(a)).collect(),
            g1: ks.iter().map(|&k| gamma_fn(1.0 + 1.0 / k)).collect(),
            ratios: ks.iter().map(|&k| weibull_moment_ratio(k)).collect(),
            alphas,
            ks,
        })
    }
}

/// Per-observation powers for every grid shape, so each candidate costs two
/// exponentials per distinct value.
struct PowerTables {
    x: Vec<f64>,
    inv_x: Vec<f64>,
    weights: Vec<i32>,
    /// x^(α−1), one row per grid α
    x_alpha: Vec<Vec<f64>>,
    /// x^k, one row per grid k
    x_k: Vec<Vec<f64>>,
}

impl PowerTables {
    fn new(sample: &Sample, grid: &ShapeGrid) -> Self {
        let ln_x = sample.ln_values();
        let row = |e: f64| ln_x.iter().map(|&l| (e * l).exp()).collect::<Vec<_>>();
        Self {
            x: sample.values().to_vec(),
            inv_x: sample.values().iter().map(|x| 1.0 / x).collect(),
            weights: sample.weights().iter().map(|&w| w as i32).collect(),
            x_alpha: grid.alphas.iter().map(|&a| row(a - 1.0)).collect(),
            x_k: grid.ks.iter().map(|&k| row(k)).collect(),
        }
    }

    /// Log-likelihood in linear space with periodic rescaling. `None` if any
    /// density value leaves the normal range; the caller then falls back to
    /// log space.
    #[allow(clippy::too_many_arguments)]
    fn log_lik(
        &self,
        ia: usize,
        ik: usize,
        p: f64,
        alpha: f64,
        ln_gamma_alpha: f64,
        beta: f64,
        k: f64,
        lambda: f64,
    ) -> Option<f64> {
        let c1 = p * (-ln_gamma_alpha - alpha * beta.ln()).exp();
        let inv_beta = 1.0 / beta;
        let c2 = (1.0 - p) * k;
        let lam_neg_k = (-k * lambda.ln()).exp();
        let xa = &self.x_alpha[ia];
        let xk = &self.x_k[ik];
        let mut prod = 1.0f64;
        let mut acc = 0.0f64;
        for i in 0..self.x.len() {
            let u = xk[i] * lam_neg_k;
            let f = c1 * xa[i] * (-self.x[i] * inv_beta).exp() + c2 * self.inv_x[i] * u * (-u).exp();
            let w = self.weights[i];
            let fw = if w == 1 { f } else { f.powi(w) };
            if fw > 1e-100 && fw < 1e100 {
                prod *= fw;
                if !(prod > 1e-150 && prod < 1e150) {
                    acc += prod.ln();
                    prod = 1.0;
                }
            } else if f.is_normal() {
                acc += w as f64 * f.ln();
            } else {
                return None;
            }
        }
        Some(acc + prod.ln())
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    ll: f64,
    params: MgwParams,
}

fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (None, x) | (x, None) => x,
        // `a` always comes from an earlier p row; it keeps ties.
        (Some(a), Some(b)) => Some(if b.ll > a.ll { b } else { a }),
    }
}

/// Moment-constrained grid estimate of the MGW.
///
/// Requires CV ≥ 1 under the configured variance divisor; below that the
/// estimate is not attempted and [`Error::CvLessThanOne`] is returned.
pub fn mixture_estimate_mgw(sample: &Sample, spec: &MixtureGridSpec) -> Result<Fit> {
    if sample.n() < 3 {
        return Err(Error::SampleTooSmall { needed: 3, got: sample.n() });
    }
    let mean = sample.mean();
    let cv = sample.cv_stat(spec.variance);
    if cv < 1.0 {
        return Err(Error::CvLessThanOne(cv));
    }
    let ps = spec.p_values()?;
    let skews = spec.skew_values()?;
    let grid = ShapeGrid::new(&skews)?;
    let tables = PowerTables::new(sample, &grid);

    let evaluate = |ia: usize, ik: usize, params: MgwParams| -> f64 {
        let fast = tables.log_lik(
            ia,
            ik,
            params.p,
            params.alpha,
            grid.ln_gamma_alphas[ia],
            params.beta,
            params.k,
            params.lambda,
        );
        match fast {
            Some(ll) if ll.is_finite() => ll,
            _ => sample.log_likelihood(&params),
        }
    };

    let row_best = |ip: usize| -> Option<Best> {
        let p = ps[ip];
        let mut best: Option<Best> = None;
        let mut offer = |ll: f64, params: MgwParams| {
            if ll.is_finite() && best.is_none_or(|b| ll > b.ll) {
                best = Some(Best { ll, params });
            }
        };
        if p == 0.0 {
            for (ik, &k) in grid.ks.iter().enumerate() {
                if (grid.ratios[ik] - (1.0 + cv)).abs() <= BOUNDARY_MATCH_TOL {
                    let params = MgwParams::weibull(k, mean / grid.g1[ik]);
                    offer(sample.log_likelihood(&params), params);
                }
            }
            return best;
        }
        if p == 1.0 {
            for &alpha in &grid.alphas {
                if (alpha - 1.0 / cv).abs() <= BOUNDARY_MATCH_TOL {
                    let params = MgwParams::gamma(alpha, mean / alpha);
                    offer(sample.log_likelihood(&params), params);
                }
            }
            return best;
        }
        let mut roots = [MomentRoot { beta_star: 0.0, lambda_star: 0.0 }; 2];
        for (ia, &alpha) in grid.alphas.iter().enumerate() {
            for (ik, &k) in grid.ks.iter().enumerate() {
                let count = admissible_roots(p, alpha, grid.g1[ik], grid.ratios[ik], cv, &mut roots);
                for root in &roots[..count] {
                    let params =
                        MgwParams { p, alpha, beta: root.beta_star * mean, k, lambda: root.lambda_star * mean };
                    offer(evaluate(ia, ik, params), params);
                }
            }
        }
        best
    };

    let rows: Vec<Option<Best>> = (0..ps.len()).into_par_iter().map(row_best).collect();
    let best = rows.into_iter().fold(None, better).ok_or(Error::NoAdmissibleCandidate)?;

    let params = best.params;
    let (family, degeneracy, at_boundary) = if params.p == 1.0 {
        (Family::Gamma, None, true)
    } else if params.p == 0.0 {
        (Family::Weibull, None, true)
    } else {
        match (params.alpha == 1.0, params.k == 1.0) {
            (true, true) => (Family::MixedExponential, Some(Degeneracy::MixtureToMixedExp), false),
            (false, true) => (Family::Mge, Some(Degeneracy::MixtureToMge), false),
            (true, false) => (Family::Mew, Some(Degeneracy::MixtureToMew), false),
            (false, false) => (Family::Mgw, None, false),
        }
    };
    Ok(Fit {
        family,
        method: Method::MixtureEstimation,
        params,
        log_lik: sample.log_likelihood(&params),
        n: sample.n(),
        degeneracy,
        at_boundary,
        iterations: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{mgw_moments, sample_mgw};

    #[test]
    fn root_examples() {
        // cv = 1 with p = 0.5, α = k = 1: double root at β* = 1, the plain exponential
        let q = quadratic(0.5, 1.0, 2.0, 1.0);
        let (r1, r2) = real_roots(q).unwrap();
        assert!((r1 - 1.0).abs() < 1e-12 || (r2 - 1.0).abs() < 1e-12);
        let roots = beta_star_roots(0.5, 1.0, 1.0, 1.0);
        for r in &roots {
            let params = MgwParams { p: 0.5, alpha: 1.0, beta: r.beta_star, k: 1.0, lambda: r.lambda_star };
            let m = mgw_moments(&params).unwrap();
            assert!((m.mean - 1.0).abs() < 1e-12);
            assert!((m.variance - 1.0).abs() < 1e-12);
        }
        assert!(beta_star_roots(0.0, 1.0, 1.0, 1.0).is_empty());
        assert!(beta_star_roots(1.0, 1.0, 1.0, 1.0).is_empty());
    }

    #[test]
    fn roots_match_moments() {
        for &(p, alpha, k, cv) in &[(0.3, 0.5, 0.8, 2.0), (0.7, 0.25, 0.6, 4.0), (0.05, 0.9, 0.95, 1.2)] {
            for r in beta_star_roots(p, alpha, k, cv) {
                let params = MgwParams { p, alpha, beta: r.beta_star, k, lambda: r.lambda_star };
                let m = mgw_moments(&params).unwrap();
                assert!((m.mean - 1.0).abs() < 1e-10, "{m:?}");
                assert!((m.cv_stat - cv).abs() < 1e-9 * cv, "{m:?}");
            }
        }
    }

    #[test]
    fn predicted_counts_agree() {
        for ip in 1..20 {
            let p = ip as f64 / 20.0;
            for &alpha in &[0.2, 0.5, 1.0] {
                for &k in &[0.5, 0.8, 1.0] {
                    for &cv in &[1.0, 1.5, 3.0, 8.0] {
                        let n = moment_quadratic_positive_roots(p, alpha, k, cv).len();
                        assert_eq!(n, predicted_positive_root_count(p, alpha, k, cv), "{p} {alpha} {k} {cv}");
                    }
                }
            }
        }
    }

    #[test]
    fn grid_values_are_exact() {
        let spec = MixtureGridSpec::default();
        let ps = spec.p_values().unwrap();
        assert_eq!(ps.len(), 101);
        assert_eq!(ps[0], 0.0);
        assert_eq!(ps[100], 1.0);
        let skews = spec.skew_values().unwrap();
        assert_eq!(skews.len(), 301);
        assert_eq!(skews[0], 2.0);
        assert_eq!(gamma_skewness_to_alpha(skews[0]).unwrap(), 1.0);
        assert_eq!(weibull_skewness_to_k(skews[0]).unwrap(), 1.0);
        assert!(MixtureGridSpec { p_step: 0.03, ..spec }.validate().is_err());
    }

    #[test]
    fn low_cv_is_rejected() {
        let xs: Vec<f64> = (1..=30).map(|i| 3.0 + 0.1 * i as f64).collect();
        let s = Sample::new(&xs).unwrap();
        assert!(matches!(mixture_estimate_mgw(&s, &MixtureGridSpec::default()), Err(Error::CvLessThanOne(_))));
    }

    #[test]
    fn coarse_grid_estimate_matches_moments() {
        let truth = MgwParams::new(0.4, 0.6, 8.0, 0.8, 2.0).unwrap();
        let xs = sample_mgw(&truth, 200, 3).unwrap();
        let s = Sample::new(&xs).unwrap();
        let spec = MixtureGridSpec { p_step: 0.05, skew_step: 0.05, ..Default::default() };
        let fit = mixture_estimate_mgw(&s, &spec).unwrap();
        let m = mgw_moments(&fit.params).unwrap();
        assert!((m.mean - s.mean()).abs() < 1e-9 * s.mean());
        let var = s.variance(VarianceDivisor::Unbiased);
        assert!((m.variance - var).abs() < 1e-9 * var);
        assert!((fit.log_lik - s.log_likelihood(&fit.params)).abs() < 1e-12);
    }

    #[test]
    fn fast_kernel_matches_log_space() {
        let truth = MgwParams::new(0.4, 0.6, 8.0, 0.8, 2.0).unwrap();
        let xs: Vec<f64> =
            sample_mgw(&truth, 300, 9).unwrap().iter().map(|x| (x * 10.0).round() / 10.0 + 0.05).collect();
        let s = Sample::new(&xs).unwrap();
        let grid = ShapeGrid::new(&[2.0, 2.5, 4.0]).unwrap();
        let tables = PowerTables::new(&s, &grid);
        for ia in 0..3 {
            for ik in 0..3 {
                let params = MgwParams { p: 0.3, alpha: grid.alphas[ia], beta: 9.0, k: grid.ks[ik], lambda: 1.7 };
                let fast =
                    tables.log_lik(ia, ik, 0.3, params.alpha, grid.ln_gamma_alphas[ia], 9.0, params.k, 1.7).unwrap();
                let slow = s.log_likelihood(&params);
                assert!((fast - slow).abs() < 1e-10 * slow.abs(), "{fast} {slow}");
            }
        }
    }
}
