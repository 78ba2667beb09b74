//! Likelihood-ratio tests against the MGW ML fit, AIC, and the final model
//! choice for one site-month.
//!
//! The five candidates are the exponential, Gamma, Weibull and mixed
//! exponential ML fits and the MGW mixture estimate. Each is tested against
//! the MGW ML fit unless the test is not applicable; then
//!
//! 1. if some candidates beat the MGW ML likelihood, the lowest AIC among
//!    them wins;
//! 2. else if the MGW ML weight sits on a boundary, the lowest AIC among the
//!    single-component ML fit it collapsed to, the mixed exponential and the
//!    mixture estimate wins;
//! 3. else the largest p-value wins, unless every p-value is below the
//!    threshold, in which case the MGW ML fit is kept.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, MgwParams};
use crate::estimators::{Degeneracy, Fit};
use crate::special::chi_square_sf;

/// The five candidates, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    Exponential,
    Gamma,
    Weibull,
    MixedExponential,
    Mixture,
}

impl CandidateKind {
    pub const ALL: [CandidateKind; 5] = [
        CandidateKind::Exponential,
        CandidateKind::Gamma,
        CandidateKind::Weibull,
        CandidateKind::MixedExponential,
        CandidateKind::Mixture,
    ];

    /// Column heading.
    pub fn heading(&self) -> &'static str {
        match self {
            CandidateKind::Exponential => "Exponential",
            CandidateKind::Gamma => "Gamma",
            CandidateKind::Weibull => "Weibull",
            CandidateKind::MixedExponential => "Mixed Exponential",
            CandidateKind::Mixture => "MGW (mixture estimation)",
        }
    }
}

/// Why a candidate has no log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unavailable {
    /// Mixture estimation needs CV ≥ 1.
    CvLessThanOne,
    /// The estimator failed on this sample.
    Failed,
}

/// What selection needs to know about one candidate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub log_lik: Result<f64, Unavailable>,
    pub degeneracy: Option<Degeneracy>,
    /// Mixture estimate with p̂ ∈ {0, 1}.
    pub at_boundary: bool,
    pub params: Option<MgwParams>,
}

impl Candidate {
    pub fn from_fit(kind: CandidateKind, fit: &Fit) -> Self {
        Self {
            kind,
            log_lik: Ok(fit.log_lik),
            degeneracy: fit.degeneracy,
            at_boundary: fit.at_boundary,
            params: Some(fit.params),
        }
    }

    pub fn unavailable(kind: CandidateKind, why: Unavailable) -> Self {
        Self { kind, log_lik: Err(why), degeneracy: None, at_boundary: false, params: None }
    }

    /// Parameters left free after the constraints each estimator imposes.
    pub fn free_parameters(&self) -> u32 {
        match (self.kind, self.degeneracy) {
            (CandidateKind::Exponential, _) => 1,
            (CandidateKind::Gamma | CandidateKind::Weibull, _) => 2,
            (CandidateKind::MixedExponential, Some(Degeneracy::MixedExpToExp)) => 1,
            (CandidateKind::MixedExponential, _) => 3,
            (CandidateKind::Mixture, _) if self.at_boundary => 2,
            (CandidateKind::Mixture, Some(Degeneracy::MixtureToMixedExp)) => 1,
            (CandidateKind::Mixture, Some(Degeneracy::MixtureToMge | Degeneracy::MixtureToMew)) => 2,
            (CandidateKind::Mixture, _) => 3,
        }
    }

    /// Family the fitted parameters belong to.
    pub fn family(&self) -> Family {
        match (self.kind, self.degeneracy) {
            (CandidateKind::Exponential, _) => Family::Exponential,
            (CandidateKind::Gamma, _) => Family::Gamma,
            (CandidateKind::Weibull, _) => Family::Weibull,
            (CandidateKind::MixedExponential, _) => Family::MixedExponential,
            (CandidateKind::Mixture, _) if self.at_boundary => match self.params {
                Some(p) if p.p == 0.0 => Family::Weibull,
                _ => Family::Gamma,
            },
            (CandidateKind::Mixture, Some(Degeneracy::MixtureToMge)) => Family::Mge,
            (CandidateKind::Mixture, Some(Degeneracy::MixtureToMew)) => Family::Mew,
            (CandidateKind::Mixture, Some(Degeneracy::MixtureToMixedExp)) => Family::MixedExponential,
            (CandidateKind::Mixture, _) => Family::Mgw,
        }
    }

    /// "MGE (mixture estimation)", "Gamma (ML estimation)" and so on.
    pub fn label(&self) -> String {
        let method = if self.kind == CandidateKind::Mixture { "mixture estimation" } else { "ML estimation" };
        format!("{} ({method})", self.family().name())
    }
}

/// The MGW ML comparison base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgwBase {
    pub log_lik: f64,
    /// Weight on a boundary (degeneracy c).
    pub degenerate: bool,
    pub params: Option<MgwParams>,
}

impl MgwBase {
    pub fn from_fit(fit: &Fit) -> Self {
        Self {
            log_lik: fit.log_lik,
            degenerate: fit.degeneracy == Some(Degeneracy::MgwMlToSingle),
            params: Some(fit.params),
        }
    }
}

pub const MGW_ML_FREE_PARAMETERS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrtStatus {
    Tested,
    CandidateExceedsMgw,
    MgwDegenerate,
    CvLessThanOne,
    MixtureAtBoundary,
    CandidateFailed,
}

impl LrtStatus {
    /// Short marker for tables.
    pub fn marker(&self) -> &'static str {
        match self {
            LrtStatus::Tested => "",
            LrtStatus::CandidateExceedsMgw => "not applicable (exceeds)",
            LrtStatus::MgwDegenerate => "not applicable (c)",
            LrtStatus::CvLessThanOne => "CV<1",
            LrtStatus::MixtureAtBoundary => "not applicable (boundary)",
            LrtStatus::CandidateFailed => "not applicable (failed)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtVerdict {
    pub candidate: CandidateKind,
    pub label: String,
    pub status: LrtStatus,
    pub statistic: Option<f64>,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
}

/// χ² degrees of freedom for the test of `candidate` against the MGW ML fit.
///
/// When the MGW ML fit itself collapsed to a single Gamma or Weibull, the
/// exponential is tested against that two-parameter model with one degree
/// of freedom.
pub fn degrees_of_freedom(candidate: &Candidate, mgw_degenerate: bool) -> Option<u32> {
    match (candidate.kind, candidate.degeneracy) {
        (CandidateKind::Exponential, _) if mgw_degenerate => Some(1),
        (CandidateKind::Exponential, _) => Some(4),
        (CandidateKind::Gamma | CandidateKind::Weibull, _) => Some(3),
        (CandidateKind::MixedExponential, Some(Degeneracy::MixedExpToExp)) => Some(4),
        (CandidateKind::MixedExponential, _) => Some(2),
        (CandidateKind::Mixture, _) if candidate.at_boundary || candidate.log_lik.is_err() => None,
        (CandidateKind::Mixture, Some(Degeneracy::MixtureToMixedExp)) => Some(4),
        (CandidateKind::Mixture, Some(Degeneracy::MixtureToMge | Degeneracy::MixtureToMew)) => Some(3),
        (CandidateKind::Mixture, _) => Some(2),
    }
}

pub fn lrt(candidate: &Candidate, mgw: &MgwBase) -> LrtVerdict {
    let verdict = |status, statistic, df, p_value| LrtVerdict {
        candidate: candidate.kind,
        label: candidate.label(),
        status,
        statistic,
        df,
        p_value,
    };
    let ll = match candidate.log_lik {
        Ok(ll) => ll,
        Err(Unavailable::CvLessThanOne) => return verdict(LrtStatus::CvLessThanOne, None, None, None),
        Err(Unavailable::Failed) => return verdict(LrtStatus::CandidateFailed, None, None, None),
    };
    if candidate.kind == CandidateKind::Mixture && candidate.at_boundary {
        return verdict(LrtStatus::MixtureAtBoundary, None, None, None);
    }
    if ll > mgw.log_lik {
        return verdict(LrtStatus::CandidateExceedsMgw, None, None, None);
    }
    if mgw.degenerate && candidate.kind != CandidateKind::Exponential {
        return verdict(LrtStatus::MgwDegenerate, None, None, None);
    }
    let df = degrees_of_freedom(candidate, mgw.degenerate).expect("tested candidates have a df");
    let statistic = 2.0 * (mgw.log_lik - ll);
    let p = chi_square_sf(statistic, df).expect("statistic is non-negative");
    verdict(LrtStatus::Tested, Some(statistic), Some(df), Some(p))
}

pub fn aic(free_parameters: u32, log_lik: f64) -> f64 {
    2.0 * free_parameters as f64 - 2.0 * log_lik
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    MaxPValue,
    AllBelowThresholdMgwMl,
    AicAmongExceeders,
    AicAfterMgwDegenerate,
}

/// What was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Candidate(CandidateKind),
    MgwMl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub site: String,
    pub month: u32,
    pub chosen: Choice,
    pub label: String,
    pub family: Family,
    pub rule: SelectionRule,
    pub log_lik: f64,
    pub aic: Option<f64>,
    /// Parameters restricted to the chosen family, `None` where the family
    /// does not use a slot. Absent entirely in bypass mode.
    pub params: Option<MaskedParams>,
    pub verdicts: Vec<LrtVerdict>,
}

/// Parameter columns as reported for a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedParams {
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
}

impl MaskedParams {
    pub fn new(family: Family, params: &MgwParams) -> Self {
        let MgwParams { p, alpha, beta, k, lambda } = *params;
        match family {
            Family::Exponential => {
                Self { p: None, alpha: Some(1.0), beta: Some(beta), k: Some(1.0), lambda: Some(beta) }
            }
            Family::Gamma => Self { p: None, alpha: Some(alpha), beta: Some(beta), k: None, lambda: None },
            Family::Weibull => Self { p: None, alpha: None, beta: None, k: Some(k), lambda: Some(lambda) },
            _ => Self { p: Some(p), alpha: Some(alpha), beta: Some(beta), k: Some(k), lambda: Some(lambda) },
        }
    }
}

/// Selection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Below this p-value a candidate is rejected.
    pub threshold: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { threshold: 0.05 }
    }
}

/// Orders candidates by a score (smaller is better), then fewer free
/// parameters, then tie-break order.
fn best_by<'a>(pool: impl Iterator<Item = (&'a Candidate, f64)>) -> Option<(&'a Candidate, f64)> {
    pool.min_by(|(a, sa), (b, sb)| {
        sa.partial_cmp(sb)
            .unwrap_or(Ordering::Equal)
            .then(a.free_parameters().cmp(&b.free_parameters()))
            .then(a.kind.cmp(&b.kind))
    })
}

fn candidate_aic(c: &Candidate) -> Option<f64> {
    c.log_lik.ok().map(|ll| aic(c.free_parameters(), ll))
}

/// Which single-component family a degenerate MGW ML fit collapsed to.
///
/// With parameters available this is read off p̂; otherwise (bypass mode)
/// it is the Gamma or Weibull ML whose likelihood is closer to the MGW ML.
pub fn degenerate_target(mgw: &MgwBase, candidates: &[Candidate]) -> CandidateKind {
    if let Some(params) = mgw.params {
        return if params.p > 0.5 { CandidateKind::Gamma } else { CandidateKind::Weibull };
    }
    let gap = |kind| {
        candidates
            .iter()
            .find(|c| c.kind == kind)
            .and_then(|c| c.log_lik.ok())
            .map(|ll| (mgw.log_lik - ll).abs())
            .unwrap_or(f64::INFINITY)
    };
    if gap(CandidateKind::Weibull) < gap(CandidateKind::Gamma) {
        CandidateKind::Weibull
    } else {
        CandidateKind::Gamma
    }
}

pub fn select_model(
    site: &str,
    month: u32,
    candidates: &[Candidate],
    mgw: &MgwBase,
    cfg: &SelectionConfig,
) -> SelectionReport {
    let verdicts: Vec<LrtVerdict> = candidates.iter().map(|c| lrt(c, mgw)).collect();
    let pick = |c: &Candidate, rule: SelectionRule| {
        let family = c.family();
        SelectionReport {
            site: site.to_string(),
            month,
            chosen: Choice::Candidate(c.kind),
            label: c.label(),
            family,
            rule,
            log_lik: c.log_lik.expect("chosen candidates have a likelihood"),
            aic: candidate_aic(c),
            params: c.params.map(|p| MaskedParams::new(family, &p)),
            verdicts: verdicts.clone(),
        }
    };

    let exceeders = candidates
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.status == LrtStatus::CandidateExceedsMgw)
        .filter_map(|(c, _)| candidate_aic(c).map(|a| (c, a)));
    if let Some((c, _)) = best_by(exceeders) {
        return pick(c, SelectionRule::AicAmongExceeders);
    }

    if mgw.degenerate {
        let target = degenerate_target(mgw, candidates);
        let pool = candidates
            .iter()
            .filter(|c| matches!(c.kind, CandidateKind::MixedExponential | CandidateKind::Mixture) || c.kind == target)
            .filter_map(|c| candidate_aic(c).map(|a| (c, a)));
        if let Some((c, _)) = best_by(pool) {
            return pick(c, SelectionRule::AicAfterMgwDegenerate);
        }
    }

    let tested = candidates
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.status == LrtStatus::Tested)
        .map(|(c, v)| (c, -v.p_value.unwrap()));
    match best_by(tested) {
        Some((c, neg_p)) if -neg_p >= cfg.threshold => pick(c, SelectionRule::MaxPValue),
        _ => SelectionReport {
            site: site.to_string(),
            month,
            chosen: Choice::MgwMl,
            label: "MGW (ML estimation)".to_string(),
            family: Family::Mgw,
            rule: SelectionRule::AllBelowThresholdMgwMl,
            log_lik: mgw.log_lik,
            aic: Some(aic(MGW_ML_FREE_PARAMETERS, mgw.log_lik)),
            params: mgw.params.map(|p| MaskedParams::new(Family::Mgw, &p)),
            verdicts,
        },
    }
}
