use std::fmt::Write;

use super::{escape, percent_label, svg_close, svg_open};
use crate::error::{Error, Result};
use crate::metrics::MethodResult;
use crate::scalar::Scalar;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const Y_TICKS: usize = 5;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// RMSE against missing rate, one polyline with circular markers per method
/// and a legend in the right margin. Every method needs a point at every rate.
pub fn render_rmse_lines<T: Scalar>(results: &[MethodResult<T>], rates: &[f64], title: &str) -> Result<String> {
    if rates.is_empty() {
        return Err(Error::InvalidParameter("line chart needs at least one rate".into()));
    }
    let mut series = Vec::with_capacity(results.len());
    for r in results {
        let mut ys = Vec::with_capacity(rates.len());
        for &rate in rates {
            let point = r.at_rate(rate).ok_or_else(|| Error::MissingRate { method: r.method.clone(), rate })?;
            ys.push(point.rmse.as_f64());
        }
        series.push((r.method.as_str(), ys));
    }

    let x_lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 0.05, x_hi + 0.05) };
    let y_max = series.iter().flat_map(|s| s.1.iter().copied()).fold(0.0, f64::max);
    let y_hi = if y_max > 0.0 && y_max.is_finite() { y_max * 1.1 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + plot_h - y / y_hi * plot_h;

    let mut out = svg_open(WIDTH as usize, HEIGHT as usize);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<path d="M{:.2} {:.2} V{:.2} H{:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        LEFT,
        TOP,
        TOP + plot_h,
        LEFT + plot_w
    );
    for &rate in rates {
        let x = px(rate);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000" stroke-width="1"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            TOP + plot_h + 18.0,
            percent_label(rate)
        );
    }
    for k in 0..=Y_TICKS {
        let v = y_hi * k as f64 / Y_TICKS as f64;
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            LEFT,
            LEFT + plot_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.3}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">Missing rate</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">RMSE</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = rates.iter().zip(ys).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-method="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(name),
            points.join(" ")
        );
        for (&x, &y) in rates.iter().zip(ys) {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg_close(&mut out);
    Ok(out)
}
