//! Heatmap panels and panel grids as standalone SVG.
//!
//! Output is a pure function of the input: fixed number formatting, no
//! timestamps, panels and cells emitted in index order. Horizontal runs of
//! equal colour within a row are merged into one rectangle.

use std::fmt::Write;

use super::colormap::{hex, ColorMap};
use super::{escape, svg_close, svg_open};
use crate::error::{Error, Result};
use crate::metrics::MaskedMatrix;
use crate::scalar::Scalar;

const TITLE_H: usize = 20;
const SUBLABEL_H: usize = 18;
const GAP: usize = 12;
const MIN_PANEL_W: usize = 110;
const ROW_LABEL_W: usize = 60;
const COLORBAR_W: usize = 14;
const COLORBAR_AREA: usize = 70;
const FIGURE_TITLE_H: usize = 26;
const COLORBAR_STEPS: usize = 64;

/// One heatmap in a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub matrix: MaskedMatrix<f64>,
    pub colormap: ColorMap,
    pub title: String,
    pub sublabel: Option<String>,
}

impl Panel {
    pub fn new<T: Scalar>(matrix: &MaskedMatrix<T>, colormap: ColorMap, title: impl Into<String>) -> Self {
        Panel { matrix: to_f64(matrix), colormap, title: title.into(), sublabel: None }
    }

    pub fn with_sublabel(mut self, sublabel: impl Into<String>) -> Self {
        self.sublabel = Some(sublabel.into());
        self
    }
}

pub(crate) fn to_f64<T: Scalar>(m: &MaskedMatrix<T>) -> MaskedMatrix<f64> {
    MaskedMatrix { values: m.values.map(|v| v.as_f64()), null_mask: m.null_mask.clone() }
}

/// A grid of panels laid out row-major. `None` leaves a slot empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub title: Option<String>,
    pub panels: Vec<Option<Panel>>,
    pub cols: usize,
    /// One label per grid row, drawn to the left (e.g. the missing rate).
    pub row_labels: Vec<String>,
    pub cell_px: usize,
    /// Draw a colorbar for this map at the right edge.
    pub colorbar: Option<ColorMap>,
}

impl FigureSpec {
    pub fn rows(&self) -> usize {
        self.panels.len().div_ceil(self.cols.max(1))
    }
}

struct Geometry {
    dim: usize,
    cell: usize,
    panel_w: usize,
    panel_h: usize,
}

impl Geometry {
    fn new(dim: usize, cell: usize) -> Self {
        let cells = dim * cell;
        Geometry { dim, cell, panel_w: cells.max(MIN_PANEL_W), panel_h: TITLE_H + cells + SUBLABEL_H }
    }
}

fn draw_panel(out: &mut String, x0: usize, y0: usize, g: &Geometry, panel: &Panel) {
    let m = &panel.matrix;
    let cx = x0 + g.panel_w / 2;
    let _ = writeln!(
        out,
        r#"<text x="{cx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        y0 + 14,
        escape(&panel.title)
    );
    let left = x0 + (g.panel_w - g.dim * g.cell) / 2;
    let top = y0 + TITLE_H;
    let cols = m.values.ncols();
    for i in 0..m.values.nrows() {
        let mut j = 0;
        while j < cols {
            let color = panel.colormap.map(m.get(i, j));
            let mut end = j + 1;
            while end < cols && panel.colormap.map(m.get(i, end)) == color {
                end += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                left + j * g.cell,
                top + i * g.cell,
                (end - j) * g.cell,
                g.cell,
                hex(color)
            );
            j = end;
        }
    }
    let side = g.dim * g.cell;
    let _ = writeln!(
        out,
        r##"<rect x="{left}" y="{top}" width="{side}" height="{side}" fill="none" stroke="#999999" stroke-width="0.5"/>"##
    );
    if let Some(sub) = &panel.sublabel {
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            top + g.dim * g.cell + 13,
            escape(sub)
        );
    }
}

fn draw_colorbar(out: &mut String, x: usize, y: usize, height: usize, cmap: &ColorMap) {
    let (vmin, vmax) = cmap.domain();
    let step_h = (height as f64 / COLORBAR_STEPS as f64).max(1.0);
    for k in 0..COLORBAR_STEPS {
        // Top of the bar is vmax.
        let t = 1.0 - (k as f64 + 0.5) / COLORBAR_STEPS as f64;
        let color = cmap.map(Some(vmin + t * (vmax - vmin)));
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{:.2}" width="{COLORBAR_W}" height="{:.2}" fill="{}"/>"#,
            y as f64 + k as f64 * step_h,
            step_h,
            hex(color)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{x}" y="{y}" width="{COLORBAR_W}" height="{:.2}" fill="none" stroke="#000000" stroke-width="0.5"/>"##,
        step_h * COLORBAR_STEPS as f64
    );
    let lx = x + COLORBAR_W + 4;
    for (label_y, v) in [(y + 10, vmax), (y + height / 2 + 4, (vmin + vmax) / 2.0), (y + height, vmin)] {
        let _ = writeln!(
            out,
            r#"<text x="{lx}" y="{label_y}" font-family="sans-serif" font-size="10">{v:.4}</text>"#
        );
    }
}

/// Standalone SVG for a single heatmap.
pub fn render_heatmap<T: Scalar>(
    matrix: &MaskedMatrix<T>,
    cmap: &ColorMap,
    title: &str,
    sublabel: Option<&str>,
    cell_px: usize,
) -> String {
    let mut panel = Panel::new(matrix, cmap.clone(), title);
    panel.sublabel = sublabel.map(str::to_owned);
    let g = Geometry::new(matrix.values.nrows().max(matrix.values.ncols()), cell_px.max(1));
    let (w, h) = (g.panel_w + 2 * GAP, g.panel_h + 2 * GAP);
    let mut out = svg_open(w, h);
    draw_panel(&mut out, GAP, GAP, &g, &panel);
    svg_close(&mut out);
    out
}

/// Standalone SVG for a grid of panels sharing one matrix dimension.
pub fn render_grid(spec: &FigureSpec) -> Result<String> {
    let first = spec
        .panels
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::InvalidParameter("figure has no panels".into()))?;
    let dim = first.matrix.values.nrows();
    for p in spec.panels.iter().flatten() {
        let (r, c) = p.matrix.values.shape();
        if r != dim || c != dim {
            return Err(Error::MixedDimensions { expected: dim, found: r.max(c) });
        }
    }
    let cols = spec.cols.max(1);
    let rows = spec.rows();
    let g = Geometry::new(dim, spec.cell_px.max(1));
    let label_w = if spec.row_labels.is_empty() { 0 } else { ROW_LABEL_W };
    let title_h = if spec.title.is_some() { FIGURE_TITLE_H } else { 0 };
    let grid_w = cols * g.panel_w + (cols - 1) * GAP;
    let grid_h = rows * g.panel_h + rows.saturating_sub(1) * GAP;
    let bar_w = if spec.colorbar.is_some() { COLORBAR_AREA } else { 0 };
    let width = GAP + label_w + grid_w + bar_w + GAP;
    let height = GAP + title_h + grid_h + GAP;

    let mut out = svg_open(width, height);
    if let Some(t) = &spec.title {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
            width / 2,
            GAP + 16,
            escape(t)
        );
    }
    let top = GAP + title_h;
    for (r, label) in spec.row_labels.iter().enumerate().take(rows) {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            GAP + label_w / 2,
            top + r * (g.panel_h + GAP) + g.panel_h / 2,
            escape(label)
        );
    }
    for (k, panel) in spec.panels.iter().enumerate() {
        let Some(panel) = panel else { continue };
        let (r, c) = (k / cols, k % cols);
        let x = GAP + label_w + c * (g.panel_w + GAP);
        let y = top + r * (g.panel_h + GAP);
        let _ = writeln!(out, r#"<g id="panel-{r}-{c}">"#);
        draw_panel(&mut out, x, y, &g, panel);
        out.push_str("</g>\n");
    }
    if let Some(cmap) = &spec.colorbar {
        let bar_h = grid_h.clamp(40, 240).min(grid_h.max(40));
        draw_colorbar(&mut out, GAP + label_w + grid_w + GAP, top + TITLE_H, bar_h.saturating_sub(TITLE_H).max(40), cmap);
    }
    svg_close(&mut out);
    Ok(out)
}
