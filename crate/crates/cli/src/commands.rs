use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use corrgap::estimators::external::import_external_imputed;
use corrgap::estimators::correlate_complete;
use corrgap::metrics::rmse_with_count;
use corrgap::{
    correlate, load_csv, local_abs_diff, local_signed_diff, normalize, write_csv, CorrelationMatrix, Dataset,
    Estimator, NormalizationMode,
};
use serde_json::Value;

use crate::config::{ExperimentConfig, PatternSpec};
use crate::error::CliError;
use crate::pipeline::{apply_pattern, render_report, run_pipeline};

#[derive(Debug, Parser)]
#[command(name = "corrgap", version, about = "Correlation estimation under missing data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a full experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Remove values from a complete CSV.
    Mask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = PatternArg::Random)]
        pattern: PatternArg,
        /// Missing rate, or block fraction for the block pattern.
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Image shape as HEIGHTxWIDTH, needed by the block pattern.
        #[arg(long, value_parser = parse_shape)]
        image_shape: Option<(usize, usize)>,
        #[arg(long, default_value_t = 0.5)]
        affected_rows: f64,
        #[arg(long, value_enum, default_value_t = CornerArg::BottomRight)]
        corner: CornerArg,
        #[arg(long)]
        no_header: bool,
    },
    /// Estimate a correlation matrix from an incomplete CSV.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// mean, knn, mice, em, softimpute, imputepca, dper or external.
        #[arg(long)]
        method: String,
        /// Extra hyperparameters as a JSON object, e.g. '{"k": 3}'.
        #[arg(long)]
        params: Option<String>,
        /// Imputed CSV for the external method.
        #[arg(long)]
        imputed: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = NormArg::Minmax01)]
        normalization: NormArg,
        #[arg(long)]
        no_header: bool,
    },
    /// Compare an estimated correlation CSV against the ground truth.
    Score {
        truth: PathBuf,
        estimate: PathBuf,
        /// Write the absolute and signed difference matrices here.
        #[arg(long)]
        diff_dir: Option<PathBuf>,
        /// Print full-precision JSON instead of the rounded line.
        #[arg(long)]
        json: bool,
    },
    /// Redraw the figures of a finished run from its report.
    Render {
        report: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternArg {
    Random,
    MonotoneBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CornerArg {
    BottomRight,
    TopRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Minmax01,
    Zscore,
    None,
}

impl From<NormArg> for NormalizationMode {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Minmax01 => NormalizationMode::MinMax01,
            NormArg::Zscore => NormalizationMode::ZScore,
            NormArg::None => NormalizationMode::None,
        }
    }
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or("expected HEIGHTxWIDTH")?;
    let h = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    Ok((h, w))
}

/// Builds an estimator from its short name plus optional JSON parameters.
pub fn estimator_from(method: &str, params: Option<&str>) -> Result<Estimator, CliError> {
    let mut obj = match params {
        None => serde_json::Map::new(),
        Some(p) => match serde_json::from_str(p) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::Config("--params must be a JSON object".into())),
            Err(e) => return Err(CliError::Config(format!("--params: {e}"))),
        },
    };
    obj.insert("method".into(), method.into());
    serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Config(format!("method `{method}`: {e}")))
}

fn run(config: &Path, workers: Option<usize>, output_dir: Option<PathBuf>, out: &mut impl Write) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if workers.is_some() {
        cfg.workers = workers;
    }
    if let Some(d) = output_dir {
        cfg.output_dir = d;
    }
    let report = run_pipeline(&cfg)?;
    let max = *report.levels.last().expect("validated non-empty");
    let _ = writeln!(out, "{:<16} {:>8} {:>5}", "method", "RMSE", "rank");
    for m in &report.methods {
        let last = m.per_rate.last().expect("one entry per level");
        match (last.rmse, m.rank_at_max_rate) {
            (Some(rmse), Some(rank)) => {
                let _ = writeln!(out, "{:<16} {:>8.4} {:>5}", m.name, rmse, rank);
            }
            _ => {
                let why = m.per_rate.iter().find_map(|r| r.error.as_deref()).unwrap_or("failed");
                let _ = writeln!(out, "{:<16} {:>8} {:>5}  ({why})", m.name, "-", "-");
            }
        }
    }
    let _ = writeln!(out, "report: {} (max level {max})", cfg.output_dir.join(crate::report::REPORT_FILE).display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn mask(
    input: &Path,
    output: &Path,
    pattern: PatternArg,
    rate: f64,
    seed: u64,
    image_shape: Option<(usize, usize)>,
    affected_rows: f64,
    corner: CornerArg,
    has_header: bool,
) -> Result<(), CliError> {
    let mut ds: Dataset<f64> = load_csv(input, has_header)?;
    if let Some((h, w)) = image_shape {
        ds = ds.with_image_shape(h, w)?;
    }
    let spec = match pattern {
        PatternArg::Random => PatternSpec::Random { rates: vec![rate] },
        PatternArg::MonotoneBlock => PatternSpec::MonotoneBlock {
            block_fractions: vec![rate],
            affected_row_fraction: affected_rows,
            corner: match corner {
                CornerArg::BottomRight => corrgap::Corner::BottomRight,
                CornerArg::TopRight => corrgap::Corner::TopRight,
            },
        },
    };
    let masked = apply_pattern(&ds, &spec, rate, seed)?;
    write_csv(&masked, output)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    output: &Path,
    method: &str,
    params: Option<&str>,
    imputed: Option<&Path>,
    seed: u64,
    normalization: NormalizationMode,
    has_header: bool,
) -> Result<(), CliError> {
    let ds: Dataset<f64> = load_csv(input, has_header)?;
    let corr = if method == "external" {
        let path = imputed.ok_or_else(|| CliError::Config("the external method needs --imputed".into()))?;
        correlate_complete(&import_external_imputed(path, has_header, &ds, "external")?)
    } else {
        let est = estimator_from(method, params)?;
        let (normalized, _) = normalize(&ds, normalization)?;
        correlate(&est.estimate(&normalized, seed)?)
    };
    corr.write_csv(ds.feature_names(), output)?;
    Ok(())
}

fn score(truth: &Path, estimate: &Path, diff_dir: Option<&Path>, json: bool, out: &mut impl Write) -> Result<(), CliError> {
    let (t, names) = CorrelationMatrix::<f64>::load_csv(truth)?;
    let (e, _) = CorrelationMatrix::<f64>::load_csv(estimate)?;
    let (rmse, valid) = rmse_with_count(&e, &t)?;
    if let Some(dir) = diff_dir {
        std::fs::create_dir_all(dir).map_err(|err| CliError::io(dir.display(), err))?;
        local_abs_diff(e.as_masked(), t.as_masked())?.write_csv(&names, dir.join("abs_diff.csv"))?;
        local_signed_diff(e.as_masked(), t.as_masked())?.write_csv(&names, dir.join("signed_diff.csv"))?;
    }
    if json {
        let _ = writeln!(out, "{}", serde_json::json!({ "rmse": rmse, "valid_cells": valid }));
    } else {
        let _ = writeln!(out, "RMSE: {rmse:.4}");
    }
    Ok(())
}

/// Executes one parsed command, writing normal output to `out`.
pub fn execute(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, workers, output_dir } => run(&config, workers, output_dir, out),
        Command::Mask { input, output, pattern, rate, seed, image_shape, affected_rows, corner, no_header } => {
            mask(&input, &output, pattern, rate, seed, image_shape, affected_rows, corner, !no_header)
        }
        Command::Estimate { input, output, method, params, imputed, seed, normalization, no_header } => estimate(
            &input,
            &output,
            &method,
            params.as_deref(),
            imputed.as_deref(),
            seed,
            normalization.into(),
            !no_header,
        ),
        Command::Score { truth, estimate, diff_dir, json } => score(&truth, &estimate, diff_dir.as_deref(), json, out),
        Command::Render { report, out_dir } => {
            for p in render_report(&report, out_dir.as_deref())? {
                let _ = writeln!(out, "{}", p.display());
            }
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
