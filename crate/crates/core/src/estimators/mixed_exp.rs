//! EM for the two-component exponential mixture p·Exp(β) + (1 − p)·Exp(λ).

use super::{simple::fit_exponential_ml, Degeneracy, Fit, Method};
use crate::distributions::{log_add_exp, Family, MgwParams};
use crate::error::{Error, Result};
use crate::sample::{Sample, VarianceDivisor};

const MAX_ITERS: usize = 200_000;
const LL_TOL: f64 = 1e-10;
const PARAM_TOL: f64 = 1e-8;
/// Relative gap under which β̂ and λ̂ are treated as one exponential.
pub const COLLAPSE_TOL: f64 = 1e-6;

/// SQUAREM (scheme 3) jumps from three successive EM iterates, taken in
/// logit/log coordinates so every candidate stays admissible. Step lengths
/// are tried longest first, halving towards the plain double step.
fn extrapolations(pts: [(f64, f64, f64); 3]) -> Vec<(f64, f64, f64)> {
    let to = |(p, b, l): (f64, f64, f64)| [(p / (1.0 - p)).ln(), b.ln(), l.ln()];
    let [t0, t1, t2] = pts.map(to);
    let r: [f64; 3] = std::array::from_fn(|i| t1[i] - t0[i]);
    let v: [f64; 3] = std::array::from_fn(|i| t2[i] - 2.0 * t1[i] + t0[i]);
    let (rr, vv) = (r.iter().map(|x| x * x).sum::<f64>(), v.iter().map(|x| x * x).sum::<f64>());
    if !(rr.is_finite() && vv > 0.0 && vv.is_finite()) {
        return Vec::new();
    }
    let mut a = -(rr / vv).sqrt();
    let mut out = Vec::new();
    while a < -1.5 && out.len() < 8 {
        let t: [f64; 3] = std::array::from_fn(|i| t0[i] - 2.0 * a * r[i] + a * a * v[i]);
        let p = 1.0 / (1.0 + (-t[0]).exp());
        let cand = (p, t[1].exp(), t[2].exp());
        if p > 0.0 && p < 1.0 && cand.1.is_normal() && cand.2.is_normal() {
            out.push(cand);
        }
        a = (a - 1.0) / 2.0;
    }
    out
}

/// One EM update. Returns the new (p, β, λ) and the log-likelihood at the
/// input parameters.
pub fn mixed_exponential_em_step(sample: &Sample, p: f64, beta: f64, lambda: f64) -> ((f64, f64, f64), f64) {
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let (ln_beta, ln_lambda) = (beta.ln(), lambda.ln());
    let (mut ll, mut s_w, mut s_wx, mut s_x) = (0.0, 0.0, 0.0, 0.0);
    for (x, _, w) in sample.iter() {
        let a = if p > 0.0 { ln_p - ln_beta - x / beta } else { f64::NEG_INFINITY };
        let b = if p < 1.0 { ln_q - ln_lambda - x / lambda } else { f64::NEG_INFINITY };
        let lf = log_add_exp(a, b);
        let post = (a - lf).exp();
        ll += w * lf;
        s_w += w * post;
        s_wx += w * post * x;
        s_x += w * x;
    }
    let n = sample.n() as f64;
    let new_p = s_w / n;
    let new_beta = if s_w > 0.0 { s_wx / s_w } else { beta };
    let rest = n - s_w;
    let new_lambda = if rest > 0.0 { ((s_x - s_wx) / rest).max(f64::MIN_POSITIVE) } else { lambda };
    ((new_p, new_beta.max(f64::MIN_POSITIVE), new_lambda), ll)
}

/// Mixed exponential ML by EM from p = 0.5, β = 1.6·x̄, λ = 0.4·x̄ (or the
/// given start), with squared-extrapolation acceleration.
///
/// When the components merge (β̂ = λ̂ to 1e-6 relative, or one weight
/// vanishes) the single-exponential fit is returned with
/// [`Degeneracy::MixedExpToExp`]. A sample whose variance (divisor n) does
/// not exceed its squared mean is such a case outright: the likelihood then
/// peaks at the single exponential, so EM is skipped.
pub fn fit_mixed_exponential_em(sample: &Sample, start: Option<(f64, f64, f64)>) -> Result<Fit> {
    if sample.n() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: sample.n() });
    }
    let mean = sample.mean();
    if sample.cv_stat(VarianceDivisor::Biased) <= 1.0 {
        let mut fit = fit_exponential_ml(sample);
        fit.degeneracy = Some(Degeneracy::MixedExpToExp);
        return Ok(fit);
    }
    let (mut p, mut beta, mut lambda) = start.unwrap_or((0.5, 1.6 * mean, 0.4 * mean));
    let mut prev_ll = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERS {
        let ((p1, b1, l1), _) = mixed_exponential_em_step(sample, p, beta, lambda);
        let ((p2, b2, l2), _) = mixed_exponential_em_step(sample, p1, b1, l1);
        iterations += 2;
        let (mut np, mut nb, mut nl) = (p2, b2, l2);
        let (_, ll2) = mixed_exponential_em_step(sample, p2, b2, l2);
        iterations += 1;
        let mut ll = ll2;
        // keep the first jump that beats the plain double step
        for (xp, xb, xl) in extrapolations([(p, beta, lambda), (p1, b1, l1), (p2, b2, l2)]) {
            let ((sp, sb, sl), xll) = mixed_exponential_em_step(sample, xp, xb, xl);
            iterations += 1;
            if xll.is_finite() && xll >= ll2 {
                (np, nb, nl) = (sp, sb, sl);
                ll = xll;
                break;
            }
        }
        let dp = (np - p).abs();
        let db = (nb - beta).abs() / beta;
        let dl = (nl - lambda).abs() / lambda;
        let gain = ll - prev_ll;
        (p, beta, lambda) = (np, nb, nl);
        prev_ll = ll;
        if gain < LL_TOL && dp.max(db).max(dl) < PARAM_TOL {
            converged = true;
            break;
        }
    }
    let merged = (beta - lambda).abs() <= COLLAPSE_TOL * beta.max(lambda);
    let vanished = p <= COLLAPSE_TOL || p >= 1.0 - COLLAPSE_TOL;
    if merged || vanished {
        let mut fit = fit_exponential_ml(sample);
        fit.degeneracy = Some(Degeneracy::MixedExpToExp);
        fit.iterations = iterations;
        fit.converged = converged;
        return Ok(fit);
    }
    let params = MgwParams::mixed_exponential(p, beta, lambda);
    Ok(Fit {
        family: Family::MixedExponential,
        method: Method::MaximumLikelihood,
        params,
        log_lik: sample.log_likelihood(&params),
        n: sample.n(),
        degeneracy: None,
        at_boundary: false,
        iterations,
        converged,
    })
}
