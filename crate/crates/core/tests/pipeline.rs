use chrono::NaiveDate;
use mgw_precip::pipeline::*;
use mgw_precip::{Error, Family, MgwParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn records(seed: u64, days: i64) -> Vec<DailyRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(1960, 6, 1).unwrap();
    let mut out = Vec::new();
    for site in ["Oka", "Dorval", "Farnham"] {
        for d in 0..days {
            let u: f64 = rand::Rng::random(&mut rng);
            let amount = if u < 0.05 {
                None
            } else if u < 0.6 {
                Some(0.0)
            } else {
                Some((((u - 0.6) * 60.0) * 10.0).round() / 10.0)
            };
            out.push(DailyRecord { site: site.into(), date: start + chrono::Duration::days(d), amount_mm: amount });
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ingestion_ignores_record_order(seed in 0u64..10_000) {
        let recs = records(seed, 900);
        let mut shuffled = recs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xabc));
        let cfg = PipelineConfig::default();
        prop_assert_eq!(ingest(&recs, &cfg).unwrap(), ingest(&shuffled, &cfg).unwrap());
    }

    #[test]
    fn group_sizes_add_up(seed in 0u64..10_000) {
        let recs = records(seed, 900);
        let cfg = PipelineConfig::default();
        let wet = recs
            .iter()
            .filter(|r| r.date >= cfg.calibration_start && r.date <= cfg.calibration_end)
            .filter(|r| r.amount_mm.is_some_and(|a| a >= cfg.wet_threshold))
            .count();
        let out = ingest(&recs, &cfg).unwrap();
        prop_assert_eq!(out.iter().map(|s| s.n).sum::<usize>(), wet);
        prop_assert!(out.iter().all(|s| s.xs.iter().all(|&x| x >= cfg.wet_threshold - cfg.offset - 1e-12)));
    }
}

#[test]
fn summaries_round_trip_through_json() {
    let out = ingest(&records(3, 2000), &PipelineConfig::default()).unwrap();
    let back = summaries_from_json(&summaries_to_json(&out).unwrap()).unwrap();
    assert_eq!(out, back);
}

#[test]
fn csv_round_trip_and_leap_day() {
    let text = "site,date,amount_mm\nOka,1964-02-29,4.0\nOka,1964-03-01,0.4\nOka,1964-02-28,\n";
    let set = read_records(text.as_bytes()).unwrap();
    assert_eq!(set.missing_amounts, 1);
    let out = ingest(&set.records, &PipelineConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!((out[0].month, out[0].n), (2, 1));
    assert!((out[0].xs[0] - 3.05).abs() < 1e-12);
}

#[test]
fn malformed_input_is_reported_with_line() {
    let text = "site,date,amount_mm\nOka,1964-02-28,1.0\nOka,1964-02-29,abc\n";
    assert!(matches!(read_records(text.as_bytes()), Err(Error::MalformedRecord { line: 3, .. })));
    let text = "site,date,amount_mm\nOka,1964-02-28,1.0,9\n";
    assert!(matches!(read_records(text.as_bytes()), Err(Error::MalformedRecord { .. })));
}

#[test]
fn calibration_window_is_configurable() {
    let recs = records(9, 3000);
    let mut cfg = PipelineConfig {
        calibration_start: NaiveDate::from_ymd_opt(1962, 1, 1).unwrap(),
        calibration_end: NaiveDate::from_ymd_opt(1962, 12, 31).unwrap(),
        ..Default::default()
    };
    let out = ingest(&recs, &cfg).unwrap();
    assert_eq!(out.len(), 36);
    cfg.calibration_end = NaiveDate::from_ymd_opt(1961, 12, 31).unwrap();
    assert!(matches!(ingest(&recs, &cfg), Err(Error::Config(_))));
}

#[test]
fn shifted_samples_respect_gauge_resolution() {
    let m = restore_location(Family::Mgw, MgwParams::new(0.48, 0.65, 5.3, 1.38, 9.5).unwrap(), 0.95);
    let xs = m.sample(10_000, 1).unwrap();
    assert!(xs.iter().all(|&x| x >= 1.0 && ((x * 10.0).round() - x * 10.0).abs() < 1e-9));
    assert_eq!(xs, m.sample(10_000, 1).unwrap());
}
