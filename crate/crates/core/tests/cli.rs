use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mgw_precip::distributions::sample_mgw;
use mgw_precip::MgwParams;

fn mgw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgw")).args(args).output().expect("binary runs")
}

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

/// Three sites over five years: a heavy-tailed mixture, a Gamma with CV < 1
/// and an exponential.
fn write_gauge_csv(path: &Path) {
    let models = [
        ("Alpha", MgwParams::new(0.45, 0.8, 2.0, 1.0, 8.0).unwrap()),
        ("Bravo", MgwParams::gamma(3.0, 2.0)),
        ("Charlie", MgwParams::exponential(5.0)),
    ];
    let start = chrono::NaiveDate::from_ymd_opt(1961, 1, 1).unwrap();
    let days = 5 * 365 + 1;
    let mut text = String::from("site,date,amount_mm\n");
    for (i, (site, params)) in models.iter().enumerate() {
        let amounts = sample_mgw(params, days, 100 + i as u64).unwrap();
        for (d, a) in amounts.iter().enumerate() {
            let date = start + chrono::Duration::days(d as i64);
            // every other day dry, amounts shifted onto the gauge scale
            let v = if d % 2 == 0 { 0.0 } else { ((a + 0.95) * 10.0).round() / 10.0 };
            writeln!(text, "{site},{date},{v:.1}").unwrap();
        }
    }
    fs::write(path, text).unwrap();
}

const FAST: [&str; 8] = [
    "--calibration-end",
    "1965-12-31",
    "--set",
    "max_outer_iters=40",
    "--set",
    "max_inner_iters=500",
    "--set",
    "skew_step=0.05",
];

#[test]
fn fit_writes_one_row_per_site_month_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("gauges.csv");
    write_gauge_csv(&input);
    let run = |out: &str, threads: &str| {
        let out_dir = dir.path().join(out);
        let mut args = vec!["fit", "--input", input.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()];
        args.extend(["--threads", threads]);
        args.extend(FAST);
        let o = mgw(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out_dir
    };
    let a = run("a", "1");
    let b = run("b", "2");
    let table = fs::read_to_string(a.join("loglik.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    assert_eq!(reader.headers().unwrap().len(), 9);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.iter().skip(3).all(|c| !c.is_empty())));
    // the Gamma site has CV < 1 every month
    assert!(rows.iter().filter(|r| &r[0] == "Bravo").all(|r| &r[7] == "CV<1"));
    let ja = fs::read(a.join("fit.json")).unwrap();
    let jb = fs::read(b.join("fit.json")).unwrap();
    assert!(ja == jb, "parallel and serial runs differ");
    let doc: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(doc["groups"].as_array().unwrap().len(), 36);
    assert_eq!(doc["warning_count"].as_u64().unwrap() as usize, doc["warnings"].as_array().unwrap().len());
    assert_eq!(doc["config"]["pipeline"]["offset"], 0.95);
}

#[test]
fn select_reads_fit_documents() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("gauges.csv");
    write_gauge_csv(&input);
    let out = dir.path().join("out");
    let mut args = vec!["fit", "--input", input.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    // January 1961 only: three small groups
    args.extend(["--calibration-end", "1961-01-31", "--set", "skew_step=0.05", "--set", "time_limit_secs=20"]);
    let o = mgw(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = out.join("fit.json");
    let o = mgw(&["select", fit.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sel: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(out.join("selection.json")).unwrap()).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&fit).unwrap()).unwrap();
    let with_mgw = doc["groups"].as_array().unwrap().iter().filter(|g| g["fits"]["mgw_ml"]["status"] == "ok").count();
    assert_eq!(sel.len(), with_mgw);
    let embedded: Vec<&serde_json::Value> = doc["groups"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|g| !g["selection"].is_null())
        .map(|g| &g["selection"])
        .collect();
    assert_eq!(embedded.len(), sel.len());
    for (a, b) in embedded.iter().zip(&sel) {
        assert_eq!(*a, b);
    }
}

#[test]
fn select_bypass_mode() {
    let dir = tempfile::tempdir().unwrap();
    let input = format!("{FIXTURES}/quebec_loglik.json");
    let o = mgw(&["select", &input, "--output-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = fs::read_to_string(dir.path().join("pvalues.csv")).unwrap();
    assert!(p.lines().nth(1).unwrap().starts_with("Dorval,Jan,0.0000,0.0134,0.1099,0.0774,0.3828"));
    let s = fs::read_to_string(dir.path().join("selection.csv")).unwrap();
    assert_eq!(s.lines().count(), 121);
    assert!(s.lines().nth(1).unwrap().starts_with("Dorval,Jan,MGE (mixture estimation),"));
    // formats switch
    let dir2 = tempfile::tempdir().unwrap();
    let o = mgw(&["select", &input, "--output-dir", dir2.path().to_str().unwrap(), "--formats", "json"]);
    assert!(o.status.success());
    assert!(!dir2.path().join("pvalues.csv").exists() && dir2.path().join("selection.json").exists());
}

#[test]
fn sample_command() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"family":"Mgw","params":{"p":0.4847,"alpha":0.6513,"beta":5.314,"k":1.3761,"lambda":9.5088}}"#,
    )
    .unwrap();
    let m = model.to_str().unwrap();
    let a = mgw(&["sample", m, "-n", "500", "--seed", "7"]);
    let b = mgw(&["sample", m, "-n", "500", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let vals: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals.len(), 500);
    assert!(vals.iter().all(|&v| v >= 1.0));
    let zero = mgw(&["sample", m, "-n", "0"]);
    assert!(zero.status.success());
    assert_eq!(String::from_utf8(zero.stdout).unwrap(), "amount_mm\n");
    let out = dir.path().join("s.csv");
    assert!(mgw(&["sample", m, "-n", "3", "--output", out.to_str().unwrap()]).status.success());
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage
    assert_eq!(mgw(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(mgw(&["fit", "--set", "nonsense=1", "--input", "x.csv"]).status.code(), Some(1));
    // I/O
    let missing = dir.path().join("missing.csv");
    assert_eq!(mgw(&["fit", "--input", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "site,date,amount_mm\nA,1961-13-01,1.0\n").unwrap();
    let o = mgw(&["fit", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // invalid model descriptor
    let model = dir.path().join("m.json");
    fs::write(&model, r#"{"params":{"p":1.5,"alpha":1,"beta":1,"k":1,"lambda":1}}"#).unwrap();
    assert_eq!(mgw(&["sample", model.to_str().unwrap(), "-n", "3"]).status.code(), Some(1));
    // config file with flag override
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "threshold = 0.2\nformats = csv\n").unwrap();
    let o = mgw(&[
        "select",
        &format!("{FIXTURES}/quebec_loglik.json"),
        "--config",
        cfg.to_str().unwrap(),
        "--threshold",
        "0.05",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("selection.csv").exists() && !dir.path().join("selection.json").exists());
    let s = fs::read_to_string(dir.path().join("selection.csv")).unwrap();
    // Nov Farnham only goes to MGW ML at the 0.05 threshold
    assert!(s.lines().any(|l| l.starts_with("Farnham,Nov,MGW (ML estimation)")));
}
