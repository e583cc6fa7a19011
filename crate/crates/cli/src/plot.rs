//! Forest plot of simultaneous confidence intervals as deterministic SVG.

use trendsim_core::report::AnalysisReport;
use trendsim_core::{Error, Result};

const ROW_HEIGHT: f64 = 16.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 42.0;
const RIGHT: f64 = 24.0;
const PLOT_WIDTH: f64 = 520.0;
const CHAR_WIDTH: f64 = 6.2; // monospace 10px

/// Render one row per contrast: CI segment, point-estimate marker, and a
/// vertical reference line at zero. Identical reports produce identical
/// bytes.
pub fn forest_plot_svg(report: &AnalysisReport) -> Result<String> {
    if report.contrasts.is_empty() {
        return Err(Error::BadReport("no contrasts to plot".into()));
    }

    let label_width = report
        .contrasts
        .iter()
        .map(|c| c.label.chars().count())
        .max()
        .unwrap() as f64
        * CHAR_WIDTH
        + 16.0;
    let width = label_width + PLOT_WIDTH + RIGHT;
    let height = TOP + report.contrasts.len() as f64 * ROW_HEIGHT + BOTTOM;

    // Data range over finite interval ends and estimates, always covering 0.
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for c in &report.contrasts {
        lo = lo.min(c.estimate);
        hi = hi.max(c.estimate);
        if let Some(l) = c.ci.0 {
            lo = lo.min(l);
        }
        if let Some(u) = c.ci.1 {
            hi = hi.max(u);
        }
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.06 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = |v: f64| label_width + (v - lo) / (hi - lo) * PLOT_WIDTH;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {0} {1}\" font-family=\"monospace\" font-size=\"10\">\n",
        fmt(width),
        fmt(height)
    ));
    svg.push_str(&format!(
        "<title>{} simultaneous confidence intervals</title>\n",
        escape(&report.contrast_kind)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{} ({:.0}% simultaneous intervals)</text>\n",
        fmt(label_width + PLOT_WIDTH / 2.0),
        escape(&report.contrast_kind),
        100.0 * (1.0 - report.alpha)
    ));

    let plot_bottom = TOP + report.contrasts.len() as f64 * ROW_HEIGHT;

    // Zero reference line.
    svg.push_str(&format!(
        "<line class=\"ref\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" \
         stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n",
        fmt(x(0.0)),
        fmt(TOP - 6.0),
        fmt(plot_bottom + 6.0)
    ));

    for (i, c) in report.contrasts.iter().enumerate() {
        let y = TOP + (i as f64 + 0.5) * ROW_HEIGHT;
        let color = if c.equivalent { "#1a1a1a" } else { "#b22222" };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"{}\">{}</text>\n",
            fmt(label_width - 8.0),
            fmt(y + 3.5),
            color,
            escape(&c.label)
        ));
        // Interval segment; infinite ends are clipped to the plot edge.
        let x1 = c.ci.0.map(&x).unwrap_or(label_width);
        let x2 = c.ci.1.map(&x).unwrap_or(label_width + PLOT_WIDTH);
        svg.push_str(&format!(
            "<line class=\"ci\" x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"1.3\"/>\n",
            fmt(x1),
            fmt(y),
            fmt(x2),
            color
        ));
        svg.push_str(&format!(
            "<circle class=\"est\" cx=\"{}\" cy=\"{}\" r=\"2.6\" fill=\"{}\"/>\n",
            fmt(x(c.estimate)),
            fmt(y),
            color
        ));
    }

    // Axis with ticks at nice values.
    svg.push_str(&format!(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#1a1a1a\"/>\n",
        fmt(label_width),
        fmt(plot_bottom + 10.0),
        fmt(label_width + PLOT_WIDTH)
    ));
    for tick in nice_ticks(lo, hi, 6) {
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#1a1a1a\"/>\n",
            fmt(x(tick)),
            fmt(plot_bottom + 10.0),
            fmt(plot_bottom + 14.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt(x(tick)),
            fmt(plot_bottom + 26.0),
            fmt_tick(tick)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">difference in transformed response</text>\n",
        fmt(label_width + PLOT_WIDTH / 2.0),
        fmt(plot_bottom + 38.0)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Ticks at multiples of 1, 2, or 5 times a power of ten.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw_step = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| (hi - lo) / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let mut ticks = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-12 * step {
        // Snap -0.0 to 0.0 so the label is stable.
        ticks.push(if t == 0.0 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
