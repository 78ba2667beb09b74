//! Run configuration and the three batch commands behind the `mgw` binary.
//!
//! `fit` reads gauge CSV, fits every candidate per site-month and writes a
//! log-likelihood table plus one JSON document. `select` turns either that
//! document or externally supplied log-likelihoods into p-value and
//! chosen-model tables. `sample` draws synthetic amounts from a model.
//!
//! Output is deterministic: groups are fitted in parallel but emitted in
//! (site, month) order, and JSON carries no timestamps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, MgwParams};
use crate::error::{Error, Result};
use crate::estimators::mgw_ml::{run_mgw_candidates, select_mgw_candidate};
use crate::estimators::{
    fit_exponential_ml, fit_gamma_ml, fit_mixed_exponential_em, fit_weibull_ml, mixture_estimate_mgw, Degeneracy, Fit,
    MgwCandidate, MixtureGridSpec, MlConfig, PriorFits,
};
use crate::pipeline::{ingest, read_records, PipelineConfig, SampleSummary, ShiftedModel};
use crate::sample::VarianceDivisor;
use crate::selection::{
    select_model, Candidate, CandidateKind, LrtStatus, MgwBase, SelectionConfig, SelectionReport, Unavailable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Not echoed into documents: where a file lands does not change it.
    #[serde(skip_serializing, default)]
    pub output_dir: PathBuf,
    pub pipeline: PipelineConfig,
    pub grid: MixtureGridSpec,
    pub ml: MlConfig,
    pub selection: SelectionConfig,
    pub formats: Formats,
    /// Worker threads; 0 uses every core. Results never depend on it.
    #[serde(skip_serializing, default)]
    pub threads: usize,
    /// Only `sample` uses it.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            output_dir: PathBuf::from("mgw-out"),
            pipeline: PipelineConfig::default(),
            grid: MixtureGridSpec::default(),
            ml: MlConfig::default(),
            selection: SelectionConfig::default(),
            formats: Formats::default(),
            threads: 0,
            seed: 0,
        }
    }
}

/// Keys understood by [`RunConfig::set`], in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "input",
    "output_dir",
    "calibration_start",
    "calibration_end",
    "wet_threshold",
    "offset",
    "variance",
    "p_step",
    "skew_min",
    "skew_max",
    "skew_step",
    "score_tol",
    "eps0",
    "p_degeneracy_tol",
    "prune_shape_cap",
    "prune_var_floor",
    "max_inner_iters",
    "max_outer_iters",
    "curvature_floor",
    "max_halvings",
    "start_p_clamp",
    "time_limit_secs",
    "threshold",
    "formats",
    "threads",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Sets one option by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input = Some(PathBuf::from(v)),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "calibration_start" => self.pipeline.calibration_start = parse_date(key, v)?,
            "calibration_end" => self.pipeline.calibration_end = parse_date(key, v)?,
            "wet_threshold" => self.pipeline.wet_threshold = parse(key, v)?,
            "offset" => self.pipeline.offset = parse(key, v)?,
            "variance" => {
                let d = match v {
                    "unbiased" => VarianceDivisor::Unbiased,
                    "biased" => VarianceDivisor::Biased,
                    _ => return Err(Error::Config(format!("variance must be unbiased or biased, got {v:?}"))),
                };
                self.pipeline.variance = d;
                self.grid.variance = d;
            }
            "p_step" => self.grid.p_step = parse(key, v)?,
            "skew_min" => self.grid.skew_min = parse(key, v)?,
            "skew_max" => self.grid.skew_max = parse(key, v)?,
            "skew_step" => self.grid.skew_step = parse(key, v)?,
            "score_tol" => self.ml.score_tol = parse(key, v)?,
            "eps0" => self.ml.eps0 = parse(key, v)?,
            "p_degeneracy_tol" => self.ml.p_degeneracy_tol = parse(key, v)?,
            "prune_shape_cap" => self.ml.prune_shape_cap = parse(key, v)?,
            "prune_var_floor" => self.ml.prune_var_floor = parse(key, v)?,
            "max_inner_iters" => self.ml.max_inner_iters = parse(key, v)?,
            "max_outer_iters" => self.ml.max_outer_iters = parse(key, v)?,
            "curvature_floor" => self.ml.curvature_floor = parse(key, v)?,
            "max_halvings" => self.ml.max_halvings = parse(key, v)?,
            "start_p_clamp" => self.ml.start_p_clamp = parse(key, v)?,
            "time_limit_secs" => self.ml.time_limit_secs = if v == "none" { None } else { Some(parse(key, v)?) },
            "threshold" => self.selection.threshold = parse(key, v)?,
            "formats" => {
                let mut f = Formats { csv: false, json: false };
                for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match part {
                        "csv" => f.csv = true,
                        "json" => f.json = true,
                        _ => return Err(Error::Config(format!("unknown format {part:?}"))),
                    }
                }
                self.formats = f;
            }
            "threads" => self.threads = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", i + 1)),
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.grid.validate()?;
        self.ml.validate()?;
        if !(self.selection.threshold > 0.0 && self.selection.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} must lie in (0, 1)", self.selection.threshold)));
        }
        if self.pipeline.variance != self.grid.variance {
            return Err(Error::Config("pipeline and grid variance divisors differ".into()));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

fn parse_date(key: &str, v: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| Error::Config(format!("bad date {v:?} for {key}")))
}

/// Process exit status for an error: 1 usage, configuration or a bad model
/// descriptor, 2 input or output, 3 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParams(_) => 1,
        Error::Io(_) | Error::MalformedRecord { .. } | Error::DuplicateRecord { .. } => 2,
        _ => 3,
    }
}

/// One estimator's result for a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Ok { fit: Fit },
    CvLessThanOne { cv_stat: f64 },
    Failed { reason: String },
}

impl FitOutcome {
    fn from_result(r: Result<Fit>) -> Self {
        match r {
            Ok(fit) => FitOutcome::Ok { fit },
            Err(Error::CvLessThanOne(cv_stat)) => FitOutcome::CvLessThanOne { cv_stat },
            Err(e) => FitOutcome::Failed { reason: e.to_string() },
        }
    }

    pub fn fit(&self) -> Option<&Fit> {
        match self {
            FitOutcome::Ok { fit } => Some(fit),
            _ => None,
        }
    }

    fn candidate(&self, kind: CandidateKind) -> Candidate {
        match self {
            FitOutcome::Ok { fit } => Candidate::from_fit(kind, fit),
            FitOutcome::CvLessThanOne { .. } => Candidate::unavailable(kind, Unavailable::CvLessThanOne),
            FitOutcome::Failed { .. } => Candidate::unavailable(kind, Unavailable::Failed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFits {
    pub exponential: FitOutcome,
    pub gamma: FitOutcome,
    pub weibull: FitOutcome,
    pub mixed_exponential: FitOutcome,
    pub mgw_mixture: FitOutcome,
    pub mgw_ml: FitOutcome,
    /// Every MGW ML start, in start order.
    pub mgw_candidates: Vec<MgwCandidate>,
}

impl GroupFits {
    /// The five selection candidates, in tie-break order.
    pub fn candidates(&self) -> Vec<Candidate> {
        vec![
            self.exponential.candidate(CandidateKind::Exponential),
            self.gamma.candidate(CandidateKind::Gamma),
            self.weibull.candidate(CandidateKind::Weibull),
            self.mixed_exponential.candidate(CandidateKind::MixedExponential),
            self.mgw_mixture.candidate(CandidateKind::Mixture),
        ]
    }

    pub fn mgw_base(&self) -> Option<MgwBase> {
        self.mgw_ml.fit().map(MgwBase::from_fit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub summary: SampleSummary,
    /// `None` when the group is too small to fit.
    pub fits: Option<GroupFits>,
    pub selection: Option<SelectionReport>,
}

/// Everything `fit` produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub config: RunConfig,
    pub missing_amounts: usize,
    pub warning_count: usize,
    pub warnings: Vec<String>,
    pub groups: Vec<GroupReport>,
}

/// Runs the five candidate estimators and MGW ML on one group.
pub fn fit_group(summary: &SampleSummary, cfg: &RunConfig) -> Result<GroupFits> {
    let sample = summary.sample()?;
    let exponential = Ok(fit_exponential_ml(&sample));
    let gamma = fit_gamma_ml(&sample);
    let weibull = fit_weibull_ml(&sample);
    let mixed = fit_mixed_exponential_em(&sample, None);
    let mixture = mixture_estimate_mgw(&sample, &cfg.grid);
    let priors = PriorFits {
        mixed_exp: mixed.as_ref().ok(),
        gamma: gamma.as_ref().ok(),
        weibull: weibull.as_ref().ok(),
        mixture: mixture.as_ref().ok(),
    };
    let (mgw_ml, mgw_candidates) = match run_mgw_candidates(&sample, &priors, &cfg.ml) {
        Ok(cands) => (select_mgw_candidate(&sample, &cands, &cfg.ml), cands),
        Err(e) => (Err(e), Vec::new()),
    };
    Ok(GroupFits {
        exponential: FitOutcome::from_result(exponential),
        gamma: FitOutcome::from_result(gamma),
        weibull: FitOutcome::from_result(weibull),
        mixed_exponential: FitOutcome::from_result(mixed),
        mgw_mixture: FitOutcome::from_result(mixture),
        mgw_ml: FitOutcome::from_result(mgw_ml),
        mgw_candidates,
    })
}

fn label(s: &SampleSummary) -> String {
    format!("{} {}", s.site, month_name(s.month))
}

fn select_group(summary: &SampleSummary, fits: &GroupFits, cfg: &SelectionConfig) -> Option<SelectionReport> {
    let mgw = fits.mgw_base()?;
    Some(select_model(&summary.site, summary.month, &fits.candidates(), &mgw, cfg))
}

/// Fits every group of an already parsed record set.
pub fn fit_summaries(summaries: Vec<SampleSummary>, missing: usize, cfg: &RunConfig) -> Result<FitDocument> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    let fitted: Vec<(SampleSummary, Option<Result<GroupFits>>)> = pool.install(|| {
        summaries
            .into_par_iter()
            .map(|s| {
                let fits = s.fittable().then(|| fit_group(&s, cfg));
                (s, fits)
            })
            .collect()
    });
    let mut warnings = Vec::new();
    if missing > 0 {
        warnings.push(format!("{missing} records with a missing amount were skipped"));
    }
    let mut groups = Vec::with_capacity(fitted.len());
    for (summary, fits) in fitted {
        let fits = match fits {
            None => {
                warnings.push(format!("{}: only {} wet days, not fitted", label(&summary), summary.n));
                None
            }
            Some(Err(e)) => {
                warnings.push(format!("{}: {e}", label(&summary)));
                None
            }
            Some(Ok(f)) => Some(f),
        };
        if let Some(f) = &fits {
            let outcomes = [
                ("Gamma ML", &f.gamma),
                ("Weibull ML", &f.weibull),
                ("mixed exponential ML", &f.mixed_exponential),
                ("mixture estimation", &f.mgw_mixture),
                ("MGW ML", &f.mgw_ml),
            ];
            for (name, o) in outcomes {
                if let FitOutcome::Failed { reason } = o {
                    warnings.push(format!("{}: {name} failed: {reason}", label(&summary)));
                }
            }
        }
        let selection = fits.as_ref().and_then(|f| select_group(&summary, f, &cfg.selection));
        groups.push(GroupReport { summary, fits, selection });
    }
    Ok(FitDocument { config: cfg.clone(), missing_amounts: missing, warning_count: warnings.len(), warnings, groups })
}

fn read_input(cfg: &RunConfig) -> Result<(Vec<SampleSummary>, usize)> {
    let path = cfg.input.as_ref().ok_or_else(|| Error::Config("no input file given".into()))?;
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let set = read_records(std::io::BufReader::new(file))?;
    Ok((ingest(&set.records, &cfg.pipeline)?, set.missing_amounts))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// `fit`: writes `loglik.csv` and `fit.json` into the output directory.
pub fn cmd_fit(cfg: &RunConfig) -> Result<FitDocument> {
    cfg.validate()?;
    let (summaries, missing) = read_input(cfg)?;
    let doc = fit_summaries(summaries, missing, cfg)?;
    if cfg.formats.csv {
        write_file(&cfg.output_dir, "loglik.csv", &loglik_table(&doc)?)?;
    }
    if cfg.formats.json {
        write_file(&cfg.output_dir, "fit.json", &to_json(&doc)?)?;
    }
    Ok(doc)
}

pub const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

pub fn month_name(month: u32) -> &'static str {
    MONTHS.get((month as usize).wrapping_sub(1)).copied().unwrap_or("?")
}

/// Fixed-point with ties to even (the standard formatter already rounds the
/// exact binary value that way).
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    // no "-0.000"
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn loglik_cell(o: &FitOutcome) -> String {
    match o {
        FitOutcome::Ok { fit } => {
            let mut s = fixed(fit.log_lik, 3);
            if let Some(d) = fit.degeneracy {
                s.push_str(&format!("({})", d.code()));
            } else if fit.at_boundary {
                s.push_str(&format!("(p={})", fit.params.p));
            }
            s
        }
        FitOutcome::CvLessThanOne { .. } => "CV<1".into(),
        FitOutcome::Failed { .. } => "failed".into(),
    }
}

const LOGLIK_HEADINGS: [&str; 6] =
    ["Exponential", "Gamma", "Weibull", "Mixed Exponential", "MGW (mixture estimation)", "MGW (ML estimation)"];

fn csv_bytes(rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// One row per site-month with the six log-likelihood columns.
pub fn loglik_table(doc: &FitDocument) -> Result<Vec<u8>> {
    let mut rows = vec![["site", "month", "n"].iter().chain(LOGLIK_HEADINGS.iter()).map(|s| s.to_string()).collect()];
    for g in &doc.groups {
        let mut row = vec![g.summary.site.clone(), month_name(g.summary.month).to_string(), g.summary.n.to_string()];
        match &g.fits {
            Some(f) => {
                for o in [&f.exponential, &f.gamma, &f.weibull, &f.mixed_exponential, &f.mgw_mixture, &f.mgw_ml] {
                    row.push(loglik_cell(o));
                }
            }
            None => row.extend(std::iter::repeat_n("not fitted".to_string(), 6)),
        }
        rows.push(row);
    }
    csv_bytes(rows)
}

/// Externally supplied log-likelihoods for one site-month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BypassRecord {
    pub site: String,
    pub month: u32,
    pub loglik: BypassLogLik,
    #[serde(default)]
    pub flags: BypassFlags,
    /// The mixture estimate sits at p̂ ∈ {0, 1}.
    #[serde(default)]
    pub mixture_at_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BypassLogLik {
    pub exponential: f64,
    pub gamma: f64,
    pub weibull: f64,
    pub mixed_exponential: f64,
    /// `null` when CV < 1.
    pub mgw_mixture: Option<f64>,
    pub mgw_ml: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BypassFlags {
    #[serde(default)]
    pub mixed_exponential: Option<Degeneracy>,
    #[serde(default)]
    pub mgw_mixture: Option<Degeneracy>,
    #[serde(default)]
    pub mgw_ml: Option<Degeneracy>,
}

impl BypassRecord {
    pub fn validate(&self) -> Result<()> {
        let ctx = format!("{} month {}", self.site, self.month);
        if !(1..=12).contains(&self.month) {
            return Err(Error::Config(format!("{ctx}: month must be 1..12")));
        }
        let f = self.flags;
        let ok = matches!(f.mixed_exponential, None | Some(Degeneracy::MixedExpToExp))
            && matches!(
                f.mgw_mixture,
                None | Some(Degeneracy::MixtureToMge | Degeneracy::MixtureToMew | Degeneracy::MixtureToMixedExp)
            )
            && matches!(f.mgw_ml, None | Some(Degeneracy::MgwMlToSingle));
        if !ok {
            return Err(Error::Config(format!("{ctx}: flag code on the wrong column: {f:?}")));
        }
        let l = self.loglik;
        let all = [l.exponential, l.gamma, l.weibull, l.mixed_exponential, l.mgw_ml];
        if all.iter().chain(l.mgw_mixture.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{ctx}: log-likelihoods must be finite")));
        }
        Ok(())
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        let c =
            |kind, ll, degeneracy| Candidate { kind, log_lik: Ok(ll), degeneracy, at_boundary: false, params: None };
        let l = self.loglik;
        let mixture = match l.mgw_mixture {
            Some(ll) => Candidate {
                at_boundary: self.mixture_at_boundary,
                ..c(CandidateKind::Mixture, ll, self.flags.mgw_mixture)
            },
            None => Candidate::unavailable(CandidateKind::Mixture, Unavailable::CvLessThanOne),
        };
        vec![
            c(CandidateKind::Exponential, l.exponential, None),
            c(CandidateKind::Gamma, l.gamma, None),
            c(CandidateKind::Weibull, l.weibull, None),
            c(CandidateKind::MixedExponential, l.mixed_exponential, self.flags.mixed_exponential),
            mixture,
        ]
    }

    pub fn mgw_base(&self) -> MgwBase {
        MgwBase { log_lik: self.loglik.mgw_ml, degenerate: self.flags.mgw_ml.is_some(), params: None }
    }

    pub fn select(&self, cfg: &SelectionConfig) -> Result<SelectionReport> {
        self.validate()?;
        Ok(select_model(&self.site, self.month, &self.candidates(), &self.mgw_base(), cfg))
    }
}

/// Selection reports from either a `fit` document or a bypass array.
pub fn select_from_json(text: &str, cfg: &SelectionConfig) -> Result<Vec<SelectionReport>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Io(format!("bad JSON: {e}")))?;
    let bad = |e: serde_json::Error| Error::Config(format!("unrecognised selection input: {e}"));
    if value.is_array() {
        let records: Vec<BypassRecord> = serde_json::from_value(value).map_err(bad)?;
        records.iter().map(|r| r.select(cfg)).collect()
    } else {
        let doc: FitDocument = serde_json::from_value(value).map_err(bad)?;
        Ok(doc.groups.iter().filter_map(|g| g.fits.as_ref().and_then(|f| select_group(&g.summary, f, cfg))).collect())
    }
}

/// p-values to four decimals, or the reason no test was run.
pub fn pvalue_table(reports: &[SelectionReport]) -> Result<Vec<u8>> {
    let mut rows = vec![["site", "month"]
        .iter()
        .map(|s| s.to_string())
        .chain(CandidateKind::ALL.iter().map(|k| k.heading().to_string()))
        .collect::<Vec<_>>()];
    for r in reports {
        let mut row = vec![r.site.clone(), month_name(r.month).to_string()];
        for kind in CandidateKind::ALL {
            let cell = match r.verdicts.iter().find(|v| v.candidate == kind) {
                Some(v) if v.status == LrtStatus::Tested => fixed(v.p_value.unwrap_or(f64::NAN), 4),
                Some(v) => v.status.marker().to_string(),
                None => String::new(),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    csv_bytes(rows)
}

/// Chosen model per site-month with the masked parameter columns.
pub fn selection_table(reports: &[SelectionReport]) -> Result<Vec<u8>> {
    let head = ["site", "month", "model", "p", "alpha", "beta", "k", "lambda", "rule"];
    let mut rows = vec![head.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for r in reports {
        let cell = |v: Option<f64>| v.map(|x| fixed(x, 4)).unwrap_or_default();
        let (p, a, b, k, l) = match r.params {
            Some(m) => (cell(m.p), cell(m.alpha), cell(m.beta), cell(m.k), cell(m.lambda)),
            None => Default::default(),
        };
        let rule = serde_json::to_value(r.rule).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        rows.push(vec![r.site.clone(), month_name(r.month).to_string(), r.label.clone(), p, a, b, k, l, rule]);
    }
    csv_bytes(rows)
}

/// `select`: writes `pvalues.csv`, `selection.csv` and `selection.json`.
pub fn cmd_select(cfg: &RunConfig, fits_json: &Path) -> Result<Vec<SelectionReport>> {
    cfg.validate()?;
    let text = fs::read_to_string(fits_json).map_err(|e| Error::Io(format!("{}: {e}", fits_json.display())))?;
    let reports = select_from_json(&text, &cfg.selection)?;
    if cfg.formats.csv {
        write_file(&cfg.output_dir, "pvalues.csv", &pvalue_table(&reports)?)?;
        write_file(&cfg.output_dir, "selection.csv", &selection_table(&reports)?)?;
    }
    if cfg.formats.json {
        write_file(&cfg.output_dir, "selection.json", &to_json(&reports)?)?;
    }
    Ok(reports)
}

/// Model descriptor accepted by `sample`. `location` defaults to the
/// configured offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub family: Option<Family>,
    pub params: MgwParams,
    #[serde(default)]
    pub location: Option<f64>,
}

impl ModelSpec {
    pub fn resolve(&self, default_location: f64) -> Result<ShiftedModel> {
        self.params.validate()?;
        let location = self.location.unwrap_or(default_location);
        if !(location >= 0.0 && location.is_finite()) {
            return Err(Error::InvalidParams(format!("location {location} must be non-negative")));
        }
        let family = self.family.unwrap_or(Family::Mgw);
        if !family.admits(&self.params, 1e-12) {
            return Err(Error::InvalidParams(format!(
                "parameters {:?} do not belong to {}",
                self.params,
                family.name()
            )));
        }
        Ok(ShiftedModel { family, params: self.params, location })
    }
}

/// `sample`: `n` amounts (one per line under an `amount_mm` header).
pub fn cmd_sample<W: Write>(model: &ShiftedModel, n: usize, seed: u64, out: &mut W) -> Result<()> {
    let xs = model.sample(n, seed)?;
    let mut text = String::with_capacity(12 * n + 10);
    text.push_str("amount_mm\n");
    for x in xs {
        text.push_str(&format!("{x:.1}\n"));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))
}

/// Reads a model descriptor file for `sample`.
pub fn read_model(path: &Path, default_location: f64) -> Result<ShiftedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let spec: ModelSpec =
        serde_json::from_str(&text).map_err(|e| Error::InvalidParams(format!("bad model descriptor: {e}")))?;
    spec.resolve(default_location)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_and_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# run\noffset = 0.5\nvariance = biased\nformats = csv\nthreads=2\n").unwrap();
        assert_eq!(cfg.pipeline.offset, 0.5);
        assert_eq!(cfg.grid.variance, VarianceDivisor::Biased);
        assert_eq!(cfg.formats, Formats { csv: true, json: false });
        cfg.set("offset", "0.95").unwrap();
        assert_eq!(cfg.pipeline.offset, 0.95);
        assert!(matches!(cfg.apply_text("nonsense\n"), Err(Error::Config(m)) if m.starts_with("line 1")));
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.validate().is_ok());
        cfg.set("threshold", "1.5").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let values = [
            ("input", "x.csv"),
            ("output_dir", "out"),
            ("calibration_start", "1961-01-01"),
            ("calibration_end", "1985-12-31"),
            ("variance", "unbiased"),
            ("time_limit_secs", "none"),
            ("formats", "csv,json"),
        ];
        for key in CONFIG_KEYS {
            let v = values.iter().find(|(k, _)| k == key).map_or("1", |(_, v)| v);
            RunConfig::default().set(key, v).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.pipeline.wet_threshold, 1.0);
        assert_eq!(cfg.pipeline.offset, 0.95);
        assert_eq!(cfg.selection.threshold, 0.05);
        assert_eq!(cfg.ml.eps0, 0.01);
        assert_eq!(cfg.grid.p_step, 0.01);
    }

    #[test]
    fn half_even_formatting() {
        assert_eq!(fixed(0.125, 2), "0.12");
        assert_eq!(fixed(0.375, 2), "0.38");
        assert_eq!(fixed(0.38275, 4), "0.3827"); // binary value is just below the tie
        assert_eq!(fixed(-0.00001, 4), "0.0000");
        assert_eq!(fixed(-642.2604, 3), "-642.260");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::Io("x".into())), 2);
        assert_eq!(exit_code(&Error::NoAdmissibleCandidate), 3);
    }

    #[test]
    fn bypass_validation() {
        let text = r#"[{"site":"A","month":1,
            "loglik":{"exponential":-10,"gamma":-9,"weibull":-9,"mixed_exponential":-9,"mgw_mixture":null,"mgw_ml":-8},
            "flags":{"mgw_mixture":"a"}}]"#;
        assert!(matches!(select_from_json(text, &SelectionConfig::default()), Err(Error::Config(_))));
        let ok = text.replace(r#""mgw_mixture":"a""#, r#""mixed_exponential":"a""#);
        let r = select_from_json(&ok, &SelectionConfig::default()).unwrap();
        assert_eq!(r[0].verdicts[4].status, LrtStatus::CvLessThanOne);
    }

    #[test]
    fn model_spec_checks_family() {
        let spec = ModelSpec { family: Some(Family::Gamma), params: MgwParams::exponential(2.0), location: None };
        assert_eq!(spec.resolve(0.95).unwrap().location, 0.95);
        let bad = ModelSpec { family: Some(Family::Weibull), params: MgwParams::gamma(2.0, 1.0), location: None };
        assert!(bad.resolve(0.95).is_err());
    }

    #[test]
    fn sample_zero_is_header_only() {
        let m = ModelSpec { family: None, params: MgwParams::exponential(3.0), location: None }.resolve(0.95).unwrap();
        let mut out = Vec::new();
        cmd_sample(&m, 0, 1, &mut out).unwrap();
        assert_eq!(out, b"amount_mm\n");
    }
}
