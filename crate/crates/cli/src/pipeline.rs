//! End-to-end runs: mask, estimate, score, render, report.

use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use corrgap::estimators::external::import_external_imputed;
use corrgap::estimators::{correlate_complete, Convergence};
use corrgap::metrics::rmse_with_count;
use corrgap::render::{build_figures, ranks_at_rate, sublabel, FigureOptions, FigureSet};
use corrgap::{
    apply_monotone_block, apply_random, correlate, ground_truth, load_csv, normalize, write_csv, CorrelationMatrix,
    Dataset, MethodResult, NormalizationSpec, RateResult,
};
use rayon::prelude::*;

use crate::config::{slug, ExperimentConfig, MethodKind, MethodSpec, PatternSpec};
use crate::error::CliError;
use crate::report::{
    DatasetInfo, ExperimentReport, FigureInfo, JobStatus, MaskInfo, MethodReport, RateReport, REPORT_FILE,
};
use crate::seed::derive_seed;

const MASKED_DIR: &str = "masked";
const CORR_DIR: &str = "correlations";
const FIGURE_DIR: &str = "figures";
const TRUTH_FILE: &str = "ground_truth.csv";

/// Level as it appears in file names, e.g. `0.1000`.
pub fn level_tag(level: f64) -> String {
    format!("{level:.4}")
}

/// Applies the configured pattern at one level.
pub fn apply_pattern(ds: &Dataset<f64>, pattern: &PatternSpec, level: f64, seed: u64) -> corrgap::Result<Dataset<f64>> {
    match pattern {
        PatternSpec::Random { .. } => apply_random(ds, level, seed),
        PatternSpec::MonotoneBlock { affected_row_fraction, corner, .. } => {
            apply_monotone_block(ds, level, *affected_row_fraction, *corner, seed)
        }
    }
}

struct Level {
    info: MaskInfo,
    raw: Arc<Dataset<f64>>,
    normalized: Arc<Dataset<f64>>,
}

struct Outcome {
    status: JobStatus,
    error: Option<String>,
    wall_time: f64,
    scored: Option<Scored>,
}

struct Scored {
    correlation: CorrelationMatrix<f64>,
    convergence: Option<Convergence>,
    rmse: f64,
    valid_cells: usize,
}

type Estimated = corrgap::Result<(CorrelationMatrix<f64>, Option<Convergence>)>;

/// Runs `work` on its own thread and gives up after `timeout`. A timed-out
/// thread is left to finish in the background; its result is discarded.
fn with_timeout(timeout: Duration, work: impl FnOnce() -> Estimated + Send + 'static) -> Result<Estimated, JobStatus> {
    let (tx, rx) = mpsc::channel();
    let spawned = std::thread::Builder::new().spawn(move || {
        let _ = tx.send(work());
    });
    if spawned.is_err() {
        return Err(JobStatus::Failed);
    }
    match rx.recv_timeout(timeout) {
        Ok(r) => Ok(r),
        Err(mpsc::RecvTimeoutError::Timeout) => Err(JobStatus::TimedOut),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(JobStatus::Failed),
    }
}

fn run_job(cfg: &ExperimentConfig, method: &MethodSpec, k: usize, level: &Level, truth: &CorrelationMatrix<f64>) -> Outcome {
    let name = method.name();
    let rate = level.info.level;
    let start = Instant::now();
    let estimated: Result<Estimated, JobStatus> = match &method.kind {
        MethodKind::Builtin(est) => {
            let est = est.clone();
            let ds = Arc::clone(&level.normalized);
            let seed = derive_seed(cfg.seed, &name, rate);
            with_timeout(Duration::from_secs_f64(cfg.timeout_secs), move || {
                let e = est.estimate(&*ds, seed)?;
                Ok((correlate(&e), e.convergence()))
            })
        }
        MethodKind::External { files, has_header } => Ok(import_external_imputed(&files[k], *has_header, &level.raw, &name)
            .map(|c| (correlate_complete(&c), None))),
    };
    let wall_time = start.elapsed().as_secs_f64();
    let failed = |status, error: String| Outcome { status, error: Some(error), wall_time, scored: None };
    match estimated {
        Err(JobStatus::TimedOut) => failed(JobStatus::TimedOut, format!("no result within {} s", cfg.timeout_secs)),
        Err(_) => failed(JobStatus::Failed, "estimator thread panicked".into()),
        Ok(Err(e)) => failed(JobStatus::Failed, e.to_string()),
        Ok(Ok((correlation, convergence))) => match rmse_with_count(&correlation, truth) {
            Err(e) => failed(JobStatus::Failed, e.to_string()),
            Ok((rmse, valid_cells)) => Outcome {
                status: JobStatus::Ok,
                error: None,
                wall_time,
                scored: Some(Scored { correlation, convergence, rmse, valid_cells }),
            },
        },
    }
}

fn create_dir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::io(p.display(), e))
}

fn rel(parts: &[&str]) -> String {
    parts.join("/")
}

pub fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads the dataset named by the config, attaching the image shape.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset<f64>, CliError> {
    let ds: Dataset<f64> = load_csv(&cfg.dataset, cfg.has_header)?;
    Ok(match cfg.image_shape {
        Some([h, w]) => ds.with_image_shape(h, w)?,
        None => ds,
    })
}

/// Executes the whole experiment and writes every artifact under
/// `cfg.output_dir`. Estimator failures are recorded in the report; only
/// configuration, data loading and I/O errors abort the run.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let truth = ground_truth(&ds)?;
    let names = ds.feature_names().to_vec();
    let out = &cfg.output_dir;
    for d in [MASKED_DIR, CORR_DIR, FIGURE_DIR] {
        create_dir(&out.join(d))?;
    }
    truth.write_csv(&names, out.join(CORR_DIR).join(TRUTH_FILE))?;

    let complete_spec = if cfg.normalize_on_complete {
        Some(NormalizationSpec::fit(&ds, cfg.normalization)?)
    } else {
        None
    };
    let total_cells = ds.n_samples() * ds.n_features();
    let mut levels = Vec::new();
    for &level in cfg.pattern.levels() {
        let seed = derive_seed(cfg.seed, "mask", level);
        let masked = apply_pattern(&ds, &cfg.pattern, level, seed)?;
        let path = rel(&[MASKED_DIR, &format!("masked_{}.csv", level_tag(level))]);
        write_csv(&masked, out.join(&path))?;
        let normalized = match &complete_spec {
            Some(spec) => spec.apply(&masked)?,
            None => normalize(&masked, cfg.normalization)?.0,
        };
        let missing_cells = masked.missing_count();
        levels.push(Level {
            info: MaskInfo { level, seed, missing_cells, missing_rate: missing_cells as f64 / total_cells as f64, path },
            raw: Arc::new(masked),
            normalized: Arc::new(normalized),
        });
    }

    let jobs: Vec<(usize, usize)> =
        (0..cfg.methods.len()).flat_map(|m| (0..levels.len()).map(move |k| (m, k))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> =
        pool.install(|| jobs.par_iter().map(|&(m, k)| run_job(cfg, &cfg.methods[m], k, &levels[k], &truth)).collect());

    let level_values: Vec<f64> = cfg.pattern.levels().to_vec();
    let mut methods = Vec::with_capacity(cfg.methods.len());
    let mut results = Vec::new();
    for (m, spec) in cfg.methods.iter().enumerate() {
        let name = spec.name();
        let mine = &outcomes[m * levels.len()..(m + 1) * levels.len()];
        let mut per_rate = Vec::with_capacity(levels.len());
        for (level, o) in levels.iter().zip(mine) {
            let mut r = RateReport {
                rate: level.info.level,
                status: o.status,
                error: o.error.clone(),
                rmse: None,
                valid_cells: None,
                rank: None,
                sublabel: None,
                wall_time_seconds: o.wall_time,
                convergence: None,
                correlation: None,
            };
            if let Some(s) = &o.scored {
                let path = rel(&[CORR_DIR, &format!("{}_{}.csv", slug(&name), level_tag(level.info.level))]);
                s.correlation.write_csv(&names, out.join(&path))?;
                r.rmse = Some(s.rmse);
                r.valid_cells = Some(s.valid_cells);
                r.convergence = s.convergence;
                r.correlation = Some(path);
            }
            per_rate.push(r);
        }
        let in_figures = mine.iter().all(|o| o.scored.is_some());
        if in_figures {
            let mut res = MethodResult::new(name.clone());
            for (level, o) in levels.iter().zip(mine) {
                let s = o.scored.as_ref().expect("all scored");
                res.per_rate.push(RateResult {
                    rate: level.info.level,
                    correlation: s.correlation.clone(),
                    rmse: s.rmse,
                    wall_time: o.wall_time,
                });
            }
            results.push(res);
        }
        methods.push(MethodReport { name, in_figures, rank_at_max_rate: None, per_rate });
    }

    assign_ranks(&mut methods, &results, &level_values)?;
    let opts = figure_options(cfg);
    let set = build_figures(&truth, &results, &level_values, &opts)?;
    let figures = write_figures(&set, &out.join(FIGURE_DIR))?;

    let report = ExperimentReport {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        seed: cfg.seed,
        config: cfg.clone(),
        dataset: DatasetInfo {
            name: dataset_name(&cfg.dataset),
            n_samples: ds.n_samples(),
            n_features: ds.n_features(),
            feature_names: names,
        },
        levels: level_values,
        ground_truth: rel(&[CORR_DIR, TRUTH_FILE]),
        masks: levels.into_iter().map(|l| l.info).collect(),
        methods,
        column_order: set.column_order,
        diff_domain: cfg.figures.diff_domain,
        figures,
    };
    report.write(&out.join(REPORT_FILE))?;
    Ok(report)
}

pub fn figure_options(cfg: &ExperimentConfig) -> FigureOptions {
    FigureOptions {
        dataset: dataset_name(&cfg.dataset),
        cell_px: cfg.figures.cell_px,
        diff_domain: cfg.figures.diff_domain,
    }
}

/// Fills per-level ranks and sublabels of the plotted methods.
fn assign_ranks(methods: &mut [MethodReport], results: &[MethodResult<f64>], levels: &[f64]) -> Result<(), CliError> {
    for (k, &level) in levels.iter().enumerate() {
        let ranks = ranks_at_rate(results, level)?;
        for (res, rank) in results.iter().zip(ranks) {
            let m = methods.iter_mut().find(|m| m.name == res.method).expect("result has a report");
            let r = &mut m.per_rate[k];
            r.rank = Some(rank);
            r.sublabel = r.rmse.map(|v| sublabel(rank, v));
            if k + 1 == levels.len() {
                m.rank_at_max_rate = Some(rank);
            }
        }
    }
    Ok(())
}

fn write_figures(set: &FigureSet, dir: &Path) -> Result<Vec<FigureInfo>, CliError> {
    create_dir(dir)?;
    let mut infos = Vec::new();
    for f in &set.figures {
        let path = dir.join(f.file_name);
        std::fs::write(&path, &f.svg).map_err(|e| CliError::io(path.display(), e))?;
        infos.push(FigureInfo { path: rel(&[FIGURE_DIR, f.file_name]), diff_vmax: f.diff_vmax });
    }
    Ok(infos)
}

/// Re-renders the figures of a finished run from its report and persisted
/// correlation CSVs, into `out_dir` (the run's figure directory by default).
pub fn render_report(report_path: &Path, out_dir: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let report = ExperimentReport::load(report_path)?;
    let base = report_path.parent().unwrap_or(Path::new("."));
    let (truth, _) = CorrelationMatrix::<f64>::load_csv(base.join(&report.ground_truth))?;
    let mut results = Vec::new();
    for m in report.methods.iter().filter(|m| m.in_figures) {
        let mut res = MethodResult::new(m.name.clone());
        for r in &m.per_rate {
            let (Some(path), Some(rmse)) = (&r.correlation, r.rmse) else {
                return Err(CliError::Config(format!("report lacks a result for {} at {}", m.name, r.rate)));
            };
            let (correlation, _) = CorrelationMatrix::load_csv(base.join(path))?;
            res.per_rate.push(RateResult { rate: r.rate, correlation, rmse, wall_time: r.wall_time_seconds });
        }
        results.push(res);
    }
    let opts = FigureOptions {
        dataset: report.dataset.name.clone(),
        cell_px: report.config.figures.cell_px,
        diff_domain: report.config.figures.diff_domain,
    };
    let set = build_figures(&truth, &results, &report.levels, &opts)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| base.join(FIGURE_DIR));
    write_figures(&set, &dir)?;
    Ok(set.figures.iter().map(|f| dir.join(f.file_name)).collect())
}
