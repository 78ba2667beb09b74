//! Daily records to site-month samples on the offset scale.

use mgw_precip::pipeline::{ingest, read_records, PipelineConfig};

const CSV: &str = "site,date,amount_mm
Oka,1961-01-03,4.2
Oka,1961-01-04,0.0
Oka,1961-01-09,
Oka,1961-01-15,12.7
Oka,1961-02-02,1.0
Dorval,1961-01-05,0.6
Dorval,1961-01-06,2.4
";

fn main() -> mgw_precip::Result<()> {
    let set = read_records(CSV.as_bytes())?;
    println!("{} records, {} missing amounts", set.records.len(), set.missing_amounts);
    for s in ingest(&set.records, &PipelineConfig::default())? {
        println!("{} month {}: n={} xs={:?} fittable={}", s.site, s.month, s.n, s.xs, s.fittable());
    }
    Ok(())
}
