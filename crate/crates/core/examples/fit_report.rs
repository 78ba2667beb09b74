//! Fit every candidate family for a few synthetic site-months and print the
//! log-likelihood table. Coarse settings keep it quick.

use mgw_precip::distributions::sample_mgw;
use mgw_precip::pipeline::SampleSummary;
use mgw_precip::report::{fit_summaries, loglik_table, RunConfig};
use mgw_precip::{MgwParams, VarianceDivisor};

fn main() -> mgw_precip::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("skew_step", "0.05")?;
    cfg.set("time_limit_secs", "20")?;
    let groups = [("Alpha", 1, MgwParams::new(0.45, 0.8, 2.0, 1.0, 8.0)?), ("Bravo", 1, MgwParams::gamma(3.0, 2.0))];
    let summaries = groups
        .iter()
        .enumerate()
        .map(|(i, (site, month, q))| {
            let xs = sample_mgw(q, 150, i as u64).unwrap();
            SampleSummary::new(site.to_string(), *month, xs, VarianceDivisor::Unbiased)
        })
        .collect();
    let doc = fit_summaries(summaries, 0, &cfg)?;
    print!("{}", String::from_utf8(loglik_table(&doc)?).unwrap());
    for g in &doc.groups {
        if let Some(sel) = &g.selection {
            println!("{} -> {}", g.summary.site, sel.label);
        }
    }
    Ok(())
}
