//! Five-parameter MGW maximum likelihood.
//!
//! For fixed shapes (α, k) the weight and scales are updated by EM until
//! their score components vanish; the shapes then take one damped gradient
//! step whose length adapts to the local curvature. Twelve starting points
//! are run, and the best converged candidate with a sensible density shape
//! wins.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Degeneracy, Fit, Method};
use crate::distributions::{classify_pdf_shape, gamma_fn, weibull_skewness_to_k, Family, Kernel, MgwParams, PdfShape};
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::special::{digamma_unchecked, trigamma_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlConfig {
    /// Every score component must fall below this in absolute value.
    pub score_tol: f64,
    /// Step damping ε₀.
    pub eps0: f64,
    /// p below this (or above 1 − this) counts as a single component.
    pub p_degeneracy_tol: f64,
    /// Shape above which a near-constant component is pruned.
    pub prune_shape_cap: f64,
    /// Component variance (mm²) below which a high-shape component is pruned.
    pub prune_var_floor: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    /// |gᵀHg| below this multiple of gᵀg is treated as zero curvature.
    pub curvature_floor: f64,
    pub max_halvings: usize,
    /// Starting weights are pulled into [this, 1 − this].
    pub start_p_clamp: f64,
    /// Wall-clock budget for all starts together; unfinished starts end as
    /// not converged.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            score_tol: 1e-3,
            eps0: 0.01,
            p_degeneracy_tol: 1e-4,
            prune_shape_cap: 25.0,
            prune_var_floor: 0.01,
            max_inner_iters: 10_000,
            max_outer_iters: 100_000,
            curvature_floor: 1e-12,
            max_halvings: 60,
            start_p_clamp: 0.01,
            time_limit_secs: None,
        }
    }
}

impl MlConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.score_tol,
            self.eps0,
            self.p_degeneracy_tol,
            self.prune_shape_cap,
            self.prune_var_floor,
            self.curvature_floor,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::Config(format!("ML settings must be positive: {self:?}")));
        }
        if !(self.start_p_clamp >= 0.0 && self.start_p_clamp < 0.5) {
            return Err(Error::Config(format!("start_p_clamp {} must lie in [0, 0.5)", self.start_p_clamp)));
        }
        if self.time_limit_secs.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("time limit must be positive".into()));
        }
        Ok(())
    }
}

/// Log-likelihood, score (∂/∂p, ∂/∂α, ∂/∂β, ∂/∂k, ∂/∂λ), the (α, k)
/// second-derivative block, and the EM update, all from one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub log_lik: f64,
    pub score: [f64; 5],
    /// [[∂²/∂α², ∂²/∂α∂k], [∂²/∂k∂α, ∂²/∂k²]]
    pub hessian: [[f64; 2]; 2],
    /// EM update of (p, β, λ) with α and k held fixed.
    pub em_update: (f64, f64, f64),
}

pub fn mgw_evaluate(sample: &Sample, params: &MgwParams) -> Evaluation {
    let MgwParams { alpha, beta, k, lambda, .. } = *params;
    let kernel = Kernel::new(params);
    let psi = digamma_unchecked(alpha);
    let psi1 = trigamma_unchecked(alpha);
    let ln_beta = beta.ln();
    let inv_k2 = 1.0 / (k * k);
    let mut ll = 0.0;
    let mut s = [0.0f64; 5];
    let (mut h_aa, mut h_kk, mut h_ak) = (0.0, 0.0, 0.0);
    let (mut sw1, mut sw1x, mut sw2, mut sw2t) = (0.0, 0.0, 0.0, 0.0);
    let q = 1.0 - params.p;
    for (x, lx, w) in sample.iter() {
        let (lg1, lg2, t, ln_ratio) = kernel.parts(x, lx);
        let (g1, g2) = (lg1.exp(), lg2.exp());
        let f = params.p * g1 + q * g2;
        // Linear space unless a component density leaves the normal range.
        let (lf, w1, w2, dp) = if f.is_normal() && g1.is_finite() && g2.is_finite() {
            let inv_f = 1.0 / f;
            (f.ln(), params.p * g1 * inv_f, q * g2 * inv_f, (g1 - g2) * inv_f)
        } else {
            let tm = kernel.terms(x, lx);
            let lf = tm.log_f;
            (lf, (tm.a - lf).exp(), (tm.b - lf).exp(), (lg1 - lf).exp() - (lg2 - lf).exp())
        };
        let a_i = lx - psi - ln_beta;
        let b_i = 1.0 / k + ln_ratio - t * ln_ratio;
        ll += w * lf;
        s[0] += w * dp;
        s[1] += w * w1 * a_i;
        s[2] += w * w1 * (x - alpha * beta) / (beta * beta);
        s[3] += w * w2 * b_i;
        s[4] += w * w2 * (k / lambda) * (t - 1.0);
        h_aa += w * (w1 * (a_i * a_i - psi1) - (w1 * a_i) * (w1 * a_i));
        h_kk += w * (w2 * (b_i * b_i - inv_k2 - t * ln_ratio * ln_ratio) - (w2 * b_i) * (w2 * b_i));
        h_ak -= w * w1 * a_i * w2 * b_i;
        sw1 += w * w1;
        sw1x += w * w1 * x;
        sw2 += w * w2;
        sw2t += w * w2 * t;
    }
    let n = sample.n() as f64;
    let new_p = sw1 / n;
    let new_beta = if sw1 > 0.0 { sw1x / (alpha * sw1) } else { beta };
    let new_lambda = if sw2 > 0.0 { lambda * (sw2t / sw2).powf(1.0 / k) } else { lambda };
    Evaluation {
        log_lik: ll,
        score: s,
        hessian: [[h_aa, h_ak], [h_ak, h_kk]],
        em_update: (new_p.clamp(0.0, 1.0), new_beta, new_lambda),
    }
}

/// ∂l/∂(p, α, β, k, λ).
pub fn mgw_score(sample: &Sample, params: &MgwParams) -> [f64; 5] {
    mgw_evaluate(sample, params).score
}

/// The p component is ignored when it pushes p further past the boundary
/// tolerance: the estimate is then a single component.
fn p_score_ok(score_p: f64, p: f64, cfg: &MlConfig) -> bool {
    score_p.abs() < cfg.score_tol
        || (score_p > 0.0 && p > 1.0 - cfg.p_degeneracy_tol)
        || (score_p < 0.0 && p < cfg.p_degeneracy_tol)
}

fn inner_converged(score: &[f64; 5], p: f64, cfg: &MlConfig) -> bool {
    p_score_ok(score[0], p, cfg) && score[2].abs() < cfg.score_tol && score[4].abs() < cfg.score_tol
}

fn fully_converged(score: &[f64; 5], p: f64, cfg: &MlConfig) -> bool {
    inner_converged(score, p, cfg) && score[1].abs() < cfg.score_tol && score[3].abs() < cfg.score_tol
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOutcome {
    pub params: MgwParams,
    pub evaluation: Evaluation,
    pub iterations: usize,
    pub converged: bool,
}

/// EM over (p, β, λ) with α and k fixed, until the p, β and λ scores vanish.
pub fn mgw_em_inner(sample: &Sample, alpha: f64, k: f64, start: (f64, f64, f64), cfg: &MlConfig) -> InnerOutcome {
    let (p, beta, lambda) = start;
    let mut params = MgwParams { p, alpha, beta, k, lambda };
    let mut evaluation = mgw_evaluate(sample, &params);
    for it in 0..cfg.max_inner_iters {
        if inner_converged(&evaluation.score, params.p, cfg) {
            return InnerOutcome { params, evaluation, iterations: it, converged: true };
        }
        let (p, beta, lambda) = evaluation.em_update;
        params = MgwParams { p, alpha, beta, k, lambda };
        evaluation = mgw_evaluate(sample, &params);
        if !evaluation.log_lik.is_finite() {
            break;
        }
    }
    let converged = inner_converged(&evaluation.score, params.p, cfg);
    InnerOutcome { params, evaluation, iterations: cfg.max_inner_iters, converged }
}

/// min(ε₀·|gᵀg / gᵀHg|, 1), or 1 when the curvature along g vanishes.
pub fn adaptive_step_factor(g: [f64; 2], h: [[f64; 2]; 2], eps0: f64, curvature_floor: f64) -> f64 {
    let gg = g[0] * g[0] + g[1] * g[1];
    if gg == 0.0 {
        return 1.0;
    }
    let hg = [h[0][0] * g[0] + h[0][1] * g[1], h[1][0] * g[0] + h[1][1] * g[1]];
    let ghg = g[0] * hg[0] + g[1] * hg[1];
    if ghg.abs() < curvature_floor * gg {
        return 1.0;
    }
    (eps0 * (gg / ghg).abs()).min(1.0)
}

/// One ascent step on (α, k), halved until both stay positive.
pub fn mgw_gradient_step(params: &MgwParams, g: [f64; 2], h: [[f64; 2]; 2], cfg: &MlConfig) -> Result<(f64, f64)> {
    let factor = adaptive_step_factor(g, h, cfg.eps0, cfg.curvature_floor);
    let mut step = [factor * g[0], factor * g[1]];
    for _ in 0..=cfg.max_halvings {
        let (a, k) = (params.alpha + step[0], params.k + step[1]);
        if a > 0.0 && k > 0.0 && a.is_finite() && k.is_finite() {
            return Ok((a, k));
        }
        step = [0.5 * step[0], 0.5 * step[1]];
    }
    Err(Error::StepLeavesDomain(cfg.max_halvings))
}

/// Fits computed on the same sample, used to seed the starts.
#[derive(Debug, Clone, Copy, Default)]
pub struct PriorFits<'a> {
    pub mixed_exp: Option<&'a Fit>,
    pub gamma: Option<&'a Fit>,
    pub weibull: Option<&'a Fit>,
    /// `None` when mixture estimation was not possible (CV < 1).
    pub mixture: Option<&'a Fit>,
}

const START_SKEWS: [f64; 3] = [1.5, 2.0, 2.5];

/// Up to twelve starting points.
///
/// 1. the mixed exponential ML; 2. the same with components swapped (both
///    dropped if the mixed exponential collapsed); 3. p = 0.5 with the Gamma
///    and Weibull ML fits; 4. the mixture estimate; 5–12. p = 0.5 with shapes
///    from skewness pairs in {1.5, 2, 2.5}² other than (2, 2), scales
///    matched to the sample mean.
pub fn mgw_initial_sets(sample: &Sample, priors: &PriorFits) -> Result<Vec<MgwParams>> {
    let mut starts = Vec::with_capacity(12);
    if let Some(me) = priors.mixed_exp {
        if me.degeneracy != Some(Degeneracy::MixedExpToExp) {
            let MgwParams { p, beta, lambda, .. } = me.params;
            starts.push(MgwParams::mixed_exponential(p, beta, lambda));
            starts.push(MgwParams::mixed_exponential(1.0 - p, lambda, beta));
        }
    }
    if let (Some(g), Some(w)) = (priors.gamma, priors.weibull) {
        starts.push(MgwParams {
            p: 0.5,
            alpha: g.params.alpha,
            beta: g.params.beta,
            k: w.params.k,
            lambda: w.params.lambda,
        });
    }
    if let Some(m) = priors.mixture {
        starts.push(m.params);
    }
    let mean = sample.mean();
    for &ga in &START_SKEWS {
        for &gk in &START_SKEWS {
            if ga == 2.0 && gk == 2.0 {
                continue;
            }
            let r = 2.0 / ga;
            let alpha = r * r;
            let k = weibull_skewness_to_k(gk)?;
            starts.push(MgwParams { p: 0.5, alpha, beta: mean / alpha, k, lambda: mean / gamma_fn(1.0 + 1.0 / k) });
        }
    }
    Ok(starts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Converged,
    NotConverged,
    Pruned,
    Failed,
}

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgwCandidate {
    pub start: MgwParams,
    pub params: MgwParams,
    pub log_lik: f64,
    pub status: CandidateStatus,
    pub shape: Option<PdfShape>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

impl MgwCandidate {
    pub fn admissible(&self) -> bool {
        self.status == CandidateStatus::Converged
            && matches!(self.shape, Some(PdfShape::MonotoneDecreasing | PdfShape::Unimodal))
    }
}

fn pruned(params: &MgwParams, cfg: &MlConfig) -> bool {
    (params.alpha > cfg.prune_shape_cap && params.gamma_component_variance() < cfg.prune_var_floor)
        || (params.k > cfg.prune_shape_cap && params.weibull_component_variance() < cfg.prune_var_floor)
}

fn run_start(sample: &Sample, start: MgwParams, cfg: &MlConfig, deadline: Option<Instant>) -> MgwCandidate {
    let clamp = cfg.start_p_clamp;
    let mut params = MgwParams { p: start.p.clamp(clamp, 1.0 - clamp), ..start };
    let mut inner_total = 0;
    let finish = |params: MgwParams, log_lik: f64, status: CandidateStatus, outer: usize, inner: usize| {
        let shape = (status == CandidateStatus::Converged).then(|| classify_pdf_shape(&params));
        MgwCandidate { start, params, log_lik, status, shape, outer_iterations: outer, inner_iterations: inner }
    };
    for outer in 0..cfg.max_outer_iters {
        if deadline.is_some_and(|d| outer % 64 == 0 && Instant::now() >= d) {
            let ll = sample.log_likelihood(&params);
            return finish(params, ll, CandidateStatus::NotConverged, outer, inner_total);
        }
        let inner = mgw_em_inner(sample, params.alpha, params.k, (params.p, params.beta, params.lambda), cfg);
        inner_total += inner.iterations;
        params = inner.params;
        let ev = inner.evaluation;
        let finite = ev.log_lik.is_finite() && ev.score.iter().all(|s| s.is_finite()) && params.validate().is_ok();
        if !finite {
            return finish(params, ev.log_lik, CandidateStatus::Failed, outer, inner_total);
        }
        if !inner.converged {
            return finish(params, ev.log_lik, CandidateStatus::NotConverged, outer, inner_total);
        }
        if pruned(&params, cfg) {
            return finish(params, ev.log_lik, CandidateStatus::Pruned, outer, inner_total);
        }
        if fully_converged(&ev.score, params.p, cfg) {
            return finish(params, ev.log_lik, CandidateStatus::Converged, outer, inner_total);
        }
        match mgw_gradient_step(&params, [ev.score[1], ev.score[3]], ev.hessian, cfg) {
            Ok((alpha, k)) => {
                params.alpha = alpha;
                params.k = k;
            }
            Err(_) => return finish(params, ev.log_lik, CandidateStatus::Failed, outer, inner_total),
        }
    }
    let ll = sample.log_likelihood(&params);
    finish(params, ll, CandidateStatus::NotConverged, cfg.max_outer_iters, inner_total)
}

/// Runs every start; candidates come back in start order.
pub fn run_mgw_candidates(sample: &Sample, priors: &PriorFits, cfg: &MlConfig) -> Result<Vec<MgwCandidate>> {
    cfg.validate()?;
    let starts = mgw_initial_sets(sample, priors)?;
    let deadline = cfg.time_limit_secs.map(|t| Instant::now() + Duration::from_secs_f64(t));
    Ok(starts.into_par_iter().map(|s| run_start(sample, s, cfg, deadline)).collect())
}

/// Picks the highest-likelihood admissible candidate; earlier starts win ties.
pub fn select_mgw_candidate(sample: &Sample, candidates: &[MgwCandidate], cfg: &MlConfig) -> Result<Fit> {
    let mut best: Option<&MgwCandidate> = None;
    for c in candidates.iter().filter(|c| c.admissible()) {
        if best.is_none_or(|b| c.log_lik > b.log_lik) {
            best = Some(c);
        }
    }
    let best = best.ok_or(Error::NoAdmissibleCandidate)?;
    let params = best.params;
    let tol = cfg.p_degeneracy_tol;
    let degeneracy = (params.p < tol || params.p > 1.0 - tol).then_some(Degeneracy::MgwMlToSingle);
    Ok(Fit {
        family: Family::Mgw,
        method: Method::MaximumLikelihood,
        params,
        log_lik: sample.log_likelihood(&params),
        n: sample.n(),
        degeneracy,
        at_boundary: false,
        iterations: best.outer_iterations,
        converged: true,
    })
}

/// MGW maximum likelihood from the twelve-start scheme.
pub fn fit_mgw_ml(sample: &Sample, priors: &PriorFits, cfg: &MlConfig) -> Result<Fit> {
    if sample.n() < 5 {
        return Err(Error::SampleTooSmall { needed: 5, got: sample.n() });
    }
    let candidates = run_mgw_candidates(sample, priors, cfg)?;
    select_mgw_candidate(sample, &candidates, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample_mgw;
    use crate::estimators::simple::{fit_gamma_ml, gamma_score};

    fn test_sample(seed: u64, n: usize) -> Sample {
        let truth = MgwParams::new(0.45, 0.7, 6.0, 1.3, 9.0).unwrap();
        Sample::new(&sample_mgw(&truth, n, seed).unwrap()).unwrap()
    }

    #[test]
    fn score_matches_finite_differences() {
        let s = test_sample(1, 150);
        let params = MgwParams::new(0.35, 0.8, 5.0, 1.1, 7.0).unwrap();
        let score = mgw_score(&s, &params);
        let h = 1e-6;
        let bump = |i: usize, d: f64| {
            let mut v = [params.p, params.alpha, params.beta, params.k, params.lambda];
            v[i] += d;
            s.log_likelihood(&MgwParams { p: v[0], alpha: v[1], beta: v[2], k: v[3], lambda: v[4] })
        };
        for (i, &si) in score.iter().enumerate() {
            let fd = (bump(i, h) - bump(i, -h)) / (2.0 * h);
            assert!((fd - si).abs() <= 1e-4 * si.abs().max(1e-2), "{i}: {fd} vs {si}");
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let s = test_sample(2, 150);
        let params = MgwParams::new(0.35, 0.8, 5.0, 1.1, 7.0).unwrap();
        let ev = mgw_evaluate(&s, &params);
        let h = 1e-5;
        let sc = |da: f64, dk: f64| mgw_score(&s, &MgwParams { alpha: params.alpha + da, k: params.k + dk, ..params });
        let haa = (sc(h, 0.0)[1] - sc(-h, 0.0)[1]) / (2.0 * h);
        let hkk = (sc(0.0, h)[3] - sc(0.0, -h)[3]) / (2.0 * h);
        let hak = (sc(0.0, h)[1] - sc(0.0, -h)[1]) / (2.0 * h);
        assert!((haa - ev.hessian[0][0]).abs() < 1e-5 * haa.abs());
        assert!((hkk - ev.hessian[1][1]).abs() < 1e-5 * hkk.abs());
        assert!((hak - ev.hessian[0][1]).abs() < 1e-5 * hak.abs().max(1.0));
    }

    #[test]
    fn gamma_nesting_at_p_one() {
        let s = test_sample(3, 200);
        let g = fit_gamma_ml(&s).unwrap();
        let params = MgwParams { p: 1.0, ..g.params };
        let score = mgw_score(&s, &params);
        let n = s.n() as f64;
        assert!(score[1].abs() < 1e-6 * n && score[2].abs() < 1e-6 * n);
        let direct = gamma_score(&s, g.params.alpha, g.params.beta);
        assert!((score[1] - direct[0]).abs() < 1e-9 * n);
    }

    #[test]
    fn step_factor_examples() {
        let f = adaptive_step_factor([-1.0, -1.0], [[-1.0, 0.0], [0.0, -1.0]], 0.01, 1e-12);
        assert!((f - 0.01).abs() < 1e-15);
        assert_eq!(adaptive_step_factor([1.0, 0.0], [[0.0, 0.0], [0.0, 0.0]], 0.01, 1e-12), 1.0);
        assert_eq!(adaptive_step_factor([1.0, 1.0], [[-1e-6, 0.0], [0.0, -1e-6]], 0.01, 1e-12), 1.0);
        let cfg = MlConfig::default();
        let p = MgwParams::new(0.5, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(mgw_gradient_step(&p, [0.0, 0.0], [[-1.0, 0.0], [0.0, -1.0]], &cfg).unwrap(), (1.0, 1.0));
        // a step that would leave the domain is halved
        let (a, k) = mgw_gradient_step(&p, [-3.0, 0.5], [[0.0, 0.0], [0.0, 0.0]], &cfg).unwrap();
        assert!(a > 0.0 && k > 1.0);
    }

    #[test]
    fn inner_em_is_monotone_and_converges() {
        let s = test_sample(4, 300);
        let cfg = MlConfig::default();
        let mut params = MgwParams::new(0.5, 0.7, 3.0, 1.2, 12.0).unwrap();
        let mut last = f64::NEG_INFINITY;
        for _ in 0..200 {
            let ev = mgw_evaluate(&s, &params);
            assert!(ev.log_lik >= last - 1e-9);
            last = ev.log_lik;
            let (p, beta, lambda) = ev.em_update;
            params = MgwParams { p, beta, lambda, ..params };
        }
        let out = mgw_em_inner(&s, 0.7, 1.2, (0.5, 3.0, 12.0), &cfg);
        assert!(out.converged);
        let sc = out.evaluation.score;
        assert!(sc[2].abs() < 1e-3 && sc[4].abs() < 1e-3);
    }

    #[test]
    fn em_inner_reduces_to_mixed_exponential() {
        let s = test_sample(5, 100);
        let params = MgwParams::mixed_exponential(0.4, 10.0, 2.0);
        let ev = mgw_evaluate(&s, &params);
        let ((p, b, l), _) = crate::estimators::mixed_exp::mixed_exponential_em_step(&s, 0.4, 10.0, 2.0);
        assert!((ev.em_update.0 - p).abs() < 1e-12);
        assert!((ev.em_update.1 - b).abs() < 1e-10);
        assert!((ev.em_update.2 - l).abs() < 1e-10);
    }
}
