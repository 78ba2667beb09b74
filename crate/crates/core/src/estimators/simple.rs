//! Maximum likelihood for the one-component families.

use super::{Fit, Method};
use crate::distributions::{Family, MgwParams};
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::special::{digamma_unchecked, ln_gamma_unchecked, trigamma_unchecked};

const ROOT_MAX_ITERS: usize = 500;

/// β̂ = x̄ and ℓ = −n(ln x̄ + 1).
pub fn fit_exponential_ml(sample: &Sample) -> Fit {
    let n = sample.n() as f64;
    let mean = sample.mean();
    Fit {
        family: Family::Exponential,
        method: Method::MaximumLikelihood,
        params: MgwParams::exponential(mean),
        log_lik: -n * (mean.ln() + 1.0),
        n: sample.n(),
        degeneracy: None,
        at_boundary: false,
        iterations: 0,
        converged: true,
    }
}

/// Gamma ML. Solves ln α − ψ(α) = ln x̄ − mean(ln x), then β = x̄/α.
pub fn fit_gamma_ml(sample: &Sample) -> Result<Fit> {
    if sample.n() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: sample.n() });
    }
    if sample.distinct() < 2 {
        return Err(Error::NonIdentifiable);
    }
    let s = sample.mean().ln() - sample.mean_ln();
    if !(s > 0.0) {
        return Err(Error::NonIdentifiable);
    }
    // h is strictly decreasing from +inf to 0.
    let h = |a: f64| a.ln() - digamma_unchecked(a) - s;
    let dh = |a: f64| 1.0 / a - trigamma_unchecked(a);
    let (alpha, iterations) = solve_decreasing(h, dh, 1.0)?;
    let beta = sample.mean() / alpha;
    let params = MgwParams::gamma(alpha, beta);
    Ok(Fit {
        family: Family::Gamma,
        method: Method::MaximumLikelihood,
        params,
        log_lik: sample.log_likelihood(&params),
        n: sample.n(),
        degeneracy: None,
        at_boundary: false,
        iterations,
        converged: true,
    })
}

/// Weibull ML via the profile equation in k, then λᵏ = mean(xᵏ).
pub fn fit_weibull_ml(sample: &Sample) -> Result<Fit> {
    if sample.n() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: sample.n() });
    }
    if sample.distinct() < 2 {
        return Err(Error::NonIdentifiable);
    }
    let ln_max = sample.max().ln();
    let shift = sample.mean_ln() - ln_max;
    let n = sample.n() as f64;
    // Weighted moments of y = ln x − ln max under weights x^k.
    let moments = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (_, lx, w) in sample.iter() {
            let y = lx - ln_max;
            let e = w * (k * y).exp();
            s0 += e;
            s1 += e * y;
            s2 += e * y * y;
        }
        (s0, s1 / s0, s2 / s0)
    };
    let h = |k: f64| {
        let (_, m1, _) = moments(k);
        1.0 / k + shift - m1
    };
    let dh = |k: f64| {
        let (_, m1, m2) = moments(k);
        -1.0 / (k * k) - (m2 - m1 * m1)
    };
    let (k, iterations) = solve_decreasing(h, dh, 1.0)?;
    let (s0, _, _) = moments(k);
    let lambda = sample.max() * (s0 / n).powf(1.0 / k);
    let params = MgwParams::weibull(k, lambda);
    Ok(Fit {
        family: Family::Weibull,
        method: Method::MaximumLikelihood,
        params,
        log_lik: sample.log_likelihood(&params),
        n: sample.n(),
        degeneracy: None,
        at_boundary: false,
        iterations,
        converged: true,
    })
}

/// Gamma score (∂ℓ/∂α, ∂ℓ/∂β).
pub fn gamma_score(sample: &Sample, alpha: f64, beta: f64) -> [f64; 2] {
    let n = sample.n() as f64;
    let d_alpha = n * (sample.mean_ln() - digamma_unchecked(alpha) - beta.ln());
    let d_beta = n * (sample.mean() - alpha * beta) / (beta * beta);
    [d_alpha, d_beta]
}

/// Weibull score (∂ℓ/∂k, ∂ℓ/∂λ).
pub fn weibull_score(sample: &Sample, k: f64, lambda: f64) -> [f64; 2] {
    let (mut d_k, mut d_lambda) = (0.0, 0.0);
    for (_, lx, w) in sample.iter() {
        let r = lx - lambda.ln();
        let t = (k * r).exp();
        d_k += w * (1.0 / k + r - t * r);
        d_lambda += w * (k / lambda) * (t - 1.0);
    }
    [d_k, d_lambda]
}

/// Gamma log-likelihood from sufficient statistics, used in tests as a
/// second route to the same number.
pub fn gamma_log_likelihood_closed(sample: &Sample, alpha: f64, beta: f64) -> f64 {
    let n = sample.n() as f64;
    n * (-ln_gamma_unchecked(alpha) - alpha * beta.ln() + (alpha - 1.0) * sample.mean_ln() - sample.mean() / beta)
}

/// Root of a strictly decreasing function on (0, ∞) by safeguarded Newton.
fn solve_decreasing(h: impl Fn(f64) -> f64, dh: impl Fn(f64) -> f64, start: f64) -> Result<(f64, usize)> {
    let mut lo = start;
    let mut hi = start;
    let mut guard = 0;
    while h(lo) < 0.0 {
        lo /= 4.0;
        guard += 1;
        if guard > 200 || lo < 1e-300 {
            return Err(Error::NonIdentifiable);
        }
    }
    while h(hi) > 0.0 {
        hi *= 4.0;
        guard += 1;
        if guard > 400 || hi > 1e300 {
            return Err(Error::NonIdentifiable);
        }
    }
    let mut x = 0.5 * (lo + hi);
    for it in 1..=ROOT_MAX_ITERS {
        let fx = h(x);
        if fx == 0.0 {
            return Ok((x, it));
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = dh(x);
        let newton = x - fx / d;
        let next = if d < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return Ok((next, it));
        }
        x = next;
    }
    Err(Error::MaxItersExceeded(ROOT_MAX_ITERS))
}
