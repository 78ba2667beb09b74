use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgw_precip::report::{self, RunConfig};
use mgw_precip::{Error, Result};

/// Fit and select daily precipitation amount models per site and month.
#[derive(Parser)]
#[command(name = "mgw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every candidate model to each site-month of a gauge CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Input CSV with header site,date,amount_mm.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        calibration_start: Option<String>,
        #[arg(long)]
        calibration_end: Option<String>,
        #[arg(long)]
        wet_threshold: Option<f64>,
        #[arg(long)]
        offset: Option<f64>,
        /// unbiased or biased.
        #[arg(long)]
        variance: Option<String>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Per-group wall-clock budget for MGW ML, seconds.
        #[arg(long)]
        time_limit_secs: Option<f64>,
    },
    /// Tests and selects models from a fit document or bypass log-likelihoods.
    Select {
        #[command(flatten)]
        common: Common,
        /// fit.json from `mgw fit`, or an array of bypass records.
        fits: PathBuf,
        /// p-value threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Draws synthetic amounts from a fitted model.
    Sample {
        #[command(flatten)]
        common: Common,
        /// JSON {"family": ..., "params": {p, alpha, beta, k, lambda}, "location": ...}.
        model: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Location added to draws when the model file has none.
        #[arg(long)]
        offset: Option<f64>,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// csv, json or csv,json.
    #[arg(long)]
    formats: Option<String>,
    /// Any config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(f) = &self.formats {
            cfg.set("formats", f)?;
        }
        for kv in &self.sets {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

fn set_opt<T: ToString>(cfg: &mut RunConfig, key: &str, v: &Option<T>) -> Result<()> {
    match v {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            common,
            input,
            calibration_start,
            calibration_end,
            wet_threshold,
            offset,
            variance,
            threads,
            time_limit_secs,
        } => {
            let mut cfg = common.config()?;
            if let Some(i) = input {
                cfg.input = Some(i);
            }
            set_opt(&mut cfg, "calibration_start", &calibration_start)?;
            set_opt(&mut cfg, "calibration_end", &calibration_end)?;
            set_opt(&mut cfg, "wet_threshold", &wet_threshold)?;
            set_opt(&mut cfg, "offset", &offset)?;
            set_opt(&mut cfg, "variance", &variance)?;
            set_opt(&mut cfg, "threads", &threads)?;
            set_opt(&mut cfg, "time_limit_secs", &time_limit_secs)?;
            let doc = report::cmd_fit(&cfg)?;
            for w in &doc.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{} groups, {} warnings, output in {}",
                doc.groups.len(),
                doc.warning_count,
                cfg.output_dir.display()
            );
        }
        Command::Select { common, fits, threshold } => {
            let mut cfg = common.config()?;
            set_opt(&mut cfg, "threshold", &threshold)?;
            let reports = report::cmd_select(&cfg, &fits)?;
            eprintln!("{} selections, output in {}", reports.len(), cfg.output_dir.display());
        }
        Command::Sample { common, model, n, seed, offset, output } => {
            let mut cfg = common.config()?;
            set_opt(&mut cfg, "seed", &seed)?;
            set_opt(&mut cfg, "offset", &offset)?;
            let model = report::read_model(&model, cfg.pipeline.offset)?;
            match output {
                Some(path) => {
                    let mut buf = Vec::new();
                    report::cmd_sample(&model, n, cfg.seed, &mut buf)?;
                    fs::write(&path, buf).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                }
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    report::cmd_sample(&model, n, cfg.seed, &mut lock)?;
                    lock.flush().map_err(|e| Error::Io(e.to_string()))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(report::exit_code(&e) as u8)
        }
    }
}
