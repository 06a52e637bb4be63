//! SVG output: colormaps, heatmap grids, line charts and the figure set.

pub mod colormap;
pub mod figures;
pub mod heatmap;
pub mod lines;

pub use colormap::{hex, map_color, ColorMap, Rgb, NULL_GRAY};
pub use figures::{
    build_figures, difference_figure, ground_truth_and_methods_figure, ranks_at_rate, rmse_figure, sublabel,
    DiffDomain, DiffKind, Figure, FigureOptions, FigureSet, FILE_NAMES, GROUND_TRUTH,
};
pub use heatmap::{render_grid, render_heatmap, FigureSpec, Panel};
pub use lines::render_rmse_lines;

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// "10%" for 0.1; one decimal when the percentage is not whole.
pub fn percent_label(rate: f64) -> String {
    let p = rate * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}%", p.round() as i64)
    } else {
        format!("{p:.1}%")
    }
}

pub(crate) fn svg_open(width: usize, height: usize) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    )
}

pub(crate) fn svg_close(out: &mut String) {
    out.push_str("</svg>\n");
}
