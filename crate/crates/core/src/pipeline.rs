//! Daily gauge records in, per-(site, month) wet-day samples out.
//!
//! Input is CSV with header `site,date,amount_mm`, ISO dates and amounts in
//! mm. A day is wet when its amount reaches the wet threshold; wet amounts
//! inside the calibration window are shifted down by the offset before
//! fitting, and the offset is added back as a location parameter when a
//! fitted model is used to generate amounts.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{mgw_moments, sample_mgw_with, Family, MgwParams};
use crate::error::{Error, Result};
use crate::sample::{Sample, VarianceDivisor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub site: String,
    pub date: NaiveDate,
    /// `None` for a missing observation.
    pub amount_mm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub calibration_start: NaiveDate,
    pub calibration_end: NaiveDate,
    pub wet_threshold: f64,
    pub offset: f64,
    pub variance: VarianceDivisor,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            calibration_start: NaiveDate::from_ymd_opt(1961, 1, 1).unwrap(),
            calibration_end: NaiveDate::from_ymd_opt(1985, 12, 31).unwrap(),
            wet_threshold: 1.0,
            offset: 0.95,
            variance: VarianceDivisor::Unbiased,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.calibration_start > self.calibration_end {
            return Err(Error::Config("calibration start is after calibration end".into()));
        }
        if !(self.offset >= 0.0 && self.offset < self.wet_threshold) {
            return Err(Error::Config(format!(
                "offset {} must be non-negative and below the wet threshold {}",
                self.offset, self.wet_threshold
            )));
        }
        Ok(())
    }
}

/// Parsed input plus the count of skipped missing amounts.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    pub records: Vec<DailyRecord>,
    pub missing_amounts: usize,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    site: String,
    date: String,
    amount_mm: String,
}

/// Reads `site,date,amount_mm` CSV. Line numbers in errors count the header
/// as line 1.
pub fn read_records<R: Read>(input: R) -> Result<RecordSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let expected = ["site", "date", "amount_mm"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(malformed(
            1,
            format!("expected header site,date,amount_mm, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut records = Vec::new();
    let mut missing = 0;
    for (i, row) in reader.deserialize::<RawRecord>().enumerate() {
        let line = i + 2;
        let raw = row.map_err(|e| malformed(e.position().map_or(line, |p| p.line() as usize), e.to_string()))?;
        if raw.site.is_empty() {
            return Err(malformed(line, "empty site".into()));
        }
        let date = NaiveDate::parse_from_str(&raw.date, "%Y-%m-%d")
            .map_err(|e| malformed(line, format!("bad date {:?}: {e}", raw.date)))?;
        let amount_mm = if raw.amount_mm.is_empty() {
            missing += 1;
            None
        } else {
            let v: f64 =
                raw.amount_mm.parse().map_err(|_| malformed(line, format!("bad amount {:?}", raw.amount_mm)))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(malformed(line, format!("amount {v} must be a non-negative number")));
            }
            Some(v)
        };
        records.push(DailyRecord { site: raw.site, date, amount_mm });
    }
    Ok(RecordSet { records, missing_amounts: missing })
}

fn malformed(line: usize, reason: String) -> Error {
    Error::MalformedRecord { line, reason }
}

/// Wet-day sample for one site and calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub site: String,
    pub month: u32,
    /// Offset-adjusted wet amounts in date order.
    pub xs: Vec<f64>,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub cv_stat: f64,
}

/// Smallest sample the full set of estimators accepts.
pub const MIN_FIT_SIZE: usize = 5;

impl SampleSummary {
    pub fn new(site: String, month: u32, xs: Vec<f64>, divisor: VarianceDivisor) -> Self {
        let n = xs.len();
        let (mean, variance) = match Sample::new(&xs) {
            Ok(s) => (s.mean(), s.variance(divisor)),
            Err(_) => (f64::NAN, f64::NAN),
        };
        Self { site, month, xs, n, mean, variance, cv_stat: variance / (mean * mean) }
    }

    pub fn fittable(&self) -> bool {
        self.n >= MIN_FIT_SIZE
    }

    pub fn sample(&self) -> Result<Sample> {
        Sample::new(&self.xs)
    }
}

/// Applies the wet-day rule, the calibration window and the offset, then
/// groups by (site, calendar month). Output is sorted by site then month and
/// does not depend on record order.
pub fn ingest(records: &[DailyRecord], cfg: &PipelineConfig) -> Result<Vec<SampleSummary>> {
    cfg.validate()?;
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert((r.site.as_str(), r.date)) {
            return Err(Error::DuplicateRecord { site: r.site.clone(), date: r.date.to_string() });
        }
    }
    let mut groups: BTreeMap<(&str, u32), Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for r in records {
        let Some(amount) = r.amount_mm else { continue };
        if amount < cfg.wet_threshold || r.date < cfg.calibration_start || r.date > cfg.calibration_end {
            continue;
        }
        groups.entry((r.site.as_str(), r.date.month())).or_default().push((r.date, amount - cfg.offset));
    }
    Ok(groups
        .into_iter()
        .map(|((site, month), mut days)| {
            days.sort_by_key(|(d, _)| *d);
            let xs = days.into_iter().map(|(_, x)| x).collect();
            SampleSummary::new(site.to_string(), month, xs, cfg.variance)
        })
        .collect())
}

pub fn summaries_to_json(summaries: &[SampleSummary]) -> Result<String> {
    serde_json::to_string_pretty(summaries).map_err(|e| Error::Io(e.to_string()))
}

pub fn summaries_from_json(text: &str) -> Result<Vec<SampleSummary>> {
    serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))
}

/// A fitted model on the offset scale, shifted back to observed amounts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedModel {
    pub family: Family,
    pub params: MgwParams,
    /// Added to every draw (mm).
    pub location: f64,
}

pub fn restore_location(family: Family, params: MgwParams, offset: f64) -> ShiftedModel {
    ShiftedModel { family, params, location: offset }
}

impl ShiftedModel {
    pub fn mean(&self) -> Result<f64> {
        Ok(mgw_moments(&self.params)?.mean + self.location)
    }

    pub fn variance(&self) -> Result<f64> {
        Ok(mgw_moments(&self.params)?.variance)
    }

    /// `n` amounts on the observed scale, rounded to gauge resolution (0.1 mm).
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = sample_mgw_with(&self.params, n, &mut rng)?;
        Ok(raw.into_iter().map(|x| ((x + self.location) * 10.0).round() / 10.0).collect())
    }
}
