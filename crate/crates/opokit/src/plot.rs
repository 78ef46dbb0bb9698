//! Minimal deterministic SVG line plots with a sibling CSV of the
//! plotted values.
//!
//! The writer is deliberately hand-rolled: fixed canvas, fixed float
//! formatting, no timestamps — identical inputs produce identical
//! bytes, which the reporting layer relies on.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::NoiseTrace;
use crate::waveguide::CoreSweep;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        PlotSeries { label: label.into(), points }
    }

    pub fn from_trace(trace: &NoiseTrace) -> Self {
        PlotSeries {
            label: trace.label.clone(),
            points: trace.points.clone(),
        }
    }

    pub fn from_sweep(sweep: &CoreSweep) -> Self {
        PlotSeries {
            label: "coupling efficiency".to_string(),
            points: sweep
                .points
                .iter()
                .filter_map(|p| p.efficiency.map(|e| (p.core_size_um, e)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxesSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Logarithmic x axis (decade ticks); x values must be positive.
    pub log_x: bool,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 58.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Write an SVG plot to `path` and the plotted values to the sibling
/// `path.csv` (columns `series,x,y`).
pub fn emit_plot(series: &[PlotSeries], path: impl AsRef<Path>, axes: &AxesSpec) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(series, axes)?;
    std::fs::write(path, svg)?;
    std::fs::write(path.with_extension("csv"), sibling_csv(series))?;
    Ok(())
}

fn sibling_csv(series: &[PlotSeries]) -> String {
    let mut out = String::from("series,x,y\n");
    for s in series {
        for &(x, y) in &s.points {
            let _ = writeln!(out, "{},{x:?},{y:?}", s.label);
        }
    }
    out
}

/// Render without touching the filesystem (also handy in tests).
pub fn render_svg(series: &[PlotSeries], axes: &AxesSpec) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::validation("nothing to plot: no series with points".to_string()));
    }
    let map_x = |x: f64| -> Result<f64> {
        if axes.log_x {
            if x <= 0.0 {
                return Err(Error::validation(format!(
                    "log x axis needs positive values (got {x})"
                )));
            }
            Ok(x.log10())
        } else {
            Ok(x)
        }
    };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            let xv = map_x(x)?;
            x_min = x_min.min(xv);
            x_max = x_max.max(xv);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if x_max == x_min {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let y_pad = 0.05 * (y_max - y_min).max(1e-12);
    y_min -= y_pad;
    y_max += y_pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |xv: f64| MARGIN_L + (xv - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        escape(&axes.title)
    );

    // frame
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L:.1}" y="{MARGIN_T:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black" stroke-width="1"/>"#
    );

    // x ticks
    let xticks = if axes.log_x {
        decade_ticks(x_min, x_max)
    } else {
        linear_ticks(x_min, x_max)
    };
    for &(xv, ref label) in &xticks {
        let x = px(xv);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{MARGIN_T:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{label}</text>"#,
            MARGIN_T + plot_h + 20.0
        );
    }
    // y ticks
    for (yv, label) in linear_ticks(y_min, y_max) {
        let y = py(yv);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L:.2}" y2="{y:.2}" stroke="black" stroke-width="1"/>"#,
            MARGIN_L - 5.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_L:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{label}</text>"#,
            MARGIN_L - 9.0,
            y + 4.0
        );
    }

    // axis labels
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(&axes.y_label)
    );

    // series
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let cmd = if j == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", px(map_x(x)?), py(y));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            d.trim_end()
        );
    }

    // legend
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 16.0 + 18.0 * i as f64;
        let x = MARGIN_L + plot_w - 170.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/>"#,
            x + 22.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 28.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Decade ticks for a log10-mapped axis.
fn decade_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let mut out = Vec::new();
    let k0 = lo.ceil() as i32;
    let k1 = hi.floor() as i32;
    for k in k0..=k1 {
        out.push((f64::from(k), format!("1e{k}")));
    }
    if out.is_empty() {
        out.push((lo, format!("1e{lo:.1}")));
        out.push((hi, format!("1e{hi:.1}")));
    }
    out
}

/// Round-number ticks covering `[lo, hi]` with ~6 intervals.
fn linear_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let decimals = (-step.log10().floor() as i32).max(0) as usize;
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * span {
        let label = if t.abs() >= 1e5 || (t != 0.0 && t.abs() < 1e-4) {
            format!("{t:e}")
        } else {
            format!("{t:.decimals$}")
        };
        out.push((t, label));
        t += step;
    }
    out
}
