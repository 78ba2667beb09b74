//! Likelihood-ratio tests and the selection rules, fed log-likelihoods
//! directly.

use mgw_precip::report::BypassRecord;
use mgw_precip::selection::SelectionConfig;

const RECORDS: &str = r#"[
  {"site": "Dorval", "month": 1,
   "loglik": {"exponential": -666.901, "gamma": -647.614, "weibull": -645.278,
              "mixed_exponential": -644.819, "mgw_mixture": -643.789, "mgw_ml": -642.26},
   "flags": {"mgw_mixture": "b1"}},
  {"site": "Synthetic", "month": 7,
   "loglik": {"exponential": -410.0, "gamma": -400.0, "weibull": -401.0,
              "mixed_exponential": -402.0, "mgw_mixture": null, "mgw_ml": -390.0}}
]"#;

fn main() -> mgw_precip::Result<()> {
    let records: Vec<BypassRecord> = serde_json::from_str(RECORDS).expect("valid records");
    let cfg = SelectionConfig::default();
    for r in &records {
        let report = r.select(&cfg)?;
        println!("{} {} -> {} by {:?}", report.site, report.month, report.label, report.rule);
        for v in &report.verdicts {
            match v.p_value {
                Some(p) => println!("  {:<28} df={} p={p:.4}", v.label, v.df.unwrap()),
                None => println!("  {:<28} {}", v.label, v.status.marker()),
            }
        }
    }
    Ok(())
}
