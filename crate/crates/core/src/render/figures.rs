//! The standard figure set for one dataset: correlation and difference
//! grids across rates, the same three views at the highest rate, and the
//! RMSE line chart.
//!
//! Columns follow [`order_methods`]: ground truth first, then methods by
//! RMSE at the highest rate, descending. Panel sublabels carry the dense
//! rank and RMSE at the panel's own rate.

use serde::{Deserialize, Serialize};

use super::heatmap::{render_grid, FigureSpec, Panel};
use super::lines::render_rmse_lines;
use super::percent_label;
use super::ColorMap;
use crate::error::{Error, Result};
use crate::metrics::{dense_rank, local_abs_diff, local_signed_diff, order_methods, CorrelationMatrix, MaskedMatrix, MethodResult};
use crate::scalar::Scalar;

pub const GROUND_TRUTH: &str = "Ground Truth";

/// Colour domain of the absolute-difference maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffDomain {
    /// `[0, M]`, `M` the largest difference shown anywhere in the figure.
    #[default]
    PerFigure,
    /// `[0, 1]`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffKind {
    Absolute,
    Signed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub dataset: String,
    pub cell_px: usize,
    pub diff_domain: DiffDomain,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions { dataset: String::new(), cell_px: 12, diff_domain: DiffDomain::PerFigure }
    }
}

/// One rendered figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub file_name: &'static str,
    pub svg: String,
    /// Upper end of the difference colour domain, for difference figures.
    pub diff_vmax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSet {
    pub figures: Vec<Figure>,
    /// Method names in column order.
    pub column_order: Vec<String>,
}

pub const FILE_NAMES: [&str; 6] = [
    "correlation_by_rate.svg",
    "difference_by_rate.svg",
    "correlation_max_rate.svg",
    "difference_max_rate.svg",
    "signed_difference_max_rate.svg",
    "rmse_by_rate.svg",
];

/// Dense ascending ranks of RMSE at `rate`, aligned with `results`.
pub fn ranks_at_rate<T: Scalar>(results: &[MethodResult<T>], rate: f64) -> Result<Vec<usize>> {
    let mut rmses = Vec::with_capacity(results.len());
    for r in results {
        let at = r.at_rate(rate).ok_or_else(|| Error::MissingRate { method: r.method.clone(), rate })?;
        rmses.push(at.rmse);
    }
    if rmses.is_empty() {
        return Ok(Vec::new());
    }
    dense_rank(&rmses, true)
}

pub fn sublabel<T: Scalar>(rank: usize, rmse: T) -> String {
    format!("({rank}) RMSE: {:.4}", rmse.as_f64())
}

fn title(opts: &FigureOptions, what: &str) -> Option<String> {
    if opts.dataset.is_empty() {
        Some(what.to_owned())
    } else {
        Some(format!("{}: {what}", opts.dataset))
    }
}

/// Grid with one row per rate: ground truth, then each method's correlation
/// heatmap. `ordered` must already be in column order.
pub fn ground_truth_and_methods_figure<T: Scalar>(
    truth: &CorrelationMatrix<T>,
    ordered: &[MethodResult<T>],
    rates: &[f64],
    opts: &FigureOptions,
) -> Result<FigureSpec> {
    let cmap = ColorMap::correlation();
    let mut panels = Vec::new();
    for &rate in rates {
        let ranks = ranks_at_rate(ordered, rate)?;
        panels.push(Some(Panel::new(truth.as_masked(), cmap.clone(), GROUND_TRUTH)));
        for (r, rank) in ordered.iter().zip(ranks) {
            let at = r.at_rate(rate).expect("checked by ranks_at_rate");
            panels.push(Some(
                Panel::new(at.correlation.as_masked(), cmap.clone(), &r.method).with_sublabel(sublabel(rank, at.rmse)),
            ));
        }
    }
    Ok(FigureSpec {
        title: title(opts, "Correlation"),
        panels,
        cols: ordered.len() + 1,
        row_labels: rates.iter().map(|&r| percent_label(r)).collect(),
        cell_px: opts.cell_px,
        colorbar: Some(cmap),
    })
}

/// Like [`ground_truth_and_methods_figure`] but each panel shows the
/// estimate minus the truth. The ground-truth panel is the truth against
/// itself, so it renders white. Returns the figure and the colour domain's
/// upper end.
pub fn difference_figure<T: Scalar>(
    truth: &CorrelationMatrix<T>,
    ordered: &[MethodResult<T>],
    rates: &[f64],
    kind: DiffKind,
    opts: &FigureOptions,
) -> Result<(FigureSpec, f64)> {
    let diff = |m: &MaskedMatrix<T>| match kind {
        DiffKind::Absolute => local_abs_diff(m, truth.as_masked()),
        DiffKind::Signed => local_signed_diff(m, truth.as_masked()),
    };
    let truth_diff = diff(truth.as_masked())?;
    let mut cells: Vec<(MaskedMatrix<T>, String, Option<String>)> = Vec::new();
    for &rate in rates {
        let ranks = ranks_at_rate(ordered, rate)?;
        cells.push((truth_diff.clone(), GROUND_TRUTH.to_owned(), None));
        for (r, rank) in ordered.iter().zip(ranks) {
            let at = r.at_rate(rate).expect("checked by ranks_at_rate");
            cells.push((diff(at.correlation.as_masked())?, r.method.clone(), Some(sublabel(rank, at.rmse))));
        }
    }
    let observed_max = cells.iter().map(|c| c.0.max_abs().as_f64()).fold(0.0, f64::max);
    let (cmap, vmax, what) = match (kind, opts.diff_domain) {
        (DiffKind::Signed, _) => {
            let cmap = ColorMap::signed(observed_max);
            let vmax = cmap.domain().1;
            (cmap, vmax, "Signed difference")
        }
        (DiffKind::Absolute, DiffDomain::PerFigure) => {
            let cmap = ColorMap::difference(observed_max);
            let vmax = cmap.domain().1;
            (cmap, vmax, "Local RMSE difference")
        }
        (DiffKind::Absolute, DiffDomain::Fixed) => (ColorMap::difference(1.0), 1.0, "Local RMSE difference"),
    };
    let panels = cells
        .into_iter()
        .map(|(m, name, sub)| {
            let mut p = Panel::new(&m, cmap.clone(), name);
            p.sublabel = sub;
            Some(p)
        })
        .collect();
    let spec = FigureSpec {
        title: title(opts, what),
        panels,
        cols: ordered.len() + 1,
        row_labels: rates.iter().map(|&r| percent_label(r)).collect(),
        cell_px: opts.cell_px,
        colorbar: Some(cmap),
    };
    Ok((spec, vmax))
}

pub fn rmse_figure<T: Scalar>(results: &[MethodResult<T>], rates: &[f64], opts: &FigureOptions) -> Result<String> {
    let t = title(opts, "RMSE by missing rate").unwrap_or_default();
    render_rmse_lines(results, rates, &t)
}

/// Renders all six figures. `results` may be in any order; methods without
/// a result at every rate must be filtered out beforehand.
pub fn build_figures<T: Scalar>(
    truth: &CorrelationMatrix<T>,
    results: &[MethodResult<T>],
    rates: &[f64],
    opts: &FigureOptions,
) -> Result<FigureSet> {
    let max_rate = rates
        .iter()
        .copied()
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
        .ok_or_else(|| Error::InvalidParameter("no rates to plot".into()))?;
    let ordered = order_methods(results.to_vec(), max_rate)?;
    let last = [max_rate];

    let fig = |k: usize, spec: &FigureSpec, diff_vmax: Option<f64>| -> Result<Figure> {
        Ok(Figure { file_name: FILE_NAMES[k], svg: render_grid(spec)?, diff_vmax })
    };
    let corr_all = ground_truth_and_methods_figure(truth, &ordered, rates, opts)?;
    let (diff_all, v_all) = difference_figure(truth, &ordered, rates, DiffKind::Absolute, opts)?;
    let corr_max = ground_truth_and_methods_figure(truth, &ordered, &last, opts)?;
    let (diff_max, v_max) = difference_figure(truth, &ordered, &last, DiffKind::Absolute, opts)?;
    let (signed_max, v_signed) = difference_figure(truth, &ordered, &last, DiffKind::Signed, opts)?;

    let figures = vec![
        fig(0, &corr_all, None)?,
        fig(1, &diff_all, Some(v_all))?,
        fig(2, &corr_max, None)?,
        fig(3, &diff_max, Some(v_max))?,
        fig(4, &signed_max, Some(v_signed))?,
        Figure { file_name: FILE_NAMES[5], svg: rmse_figure(&ordered, rates, opts)?, diff_vmax: None },
    ];
    Ok(FigureSet { figures, column_order: ordered.iter().map(|r| r.method.clone()).collect() })
}
