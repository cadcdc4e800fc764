//! Deterministic SVG rendering for report figures.
//!
//! Hand-rolled on purpose: the output must be byte-stable across runs
//! and platforms so it can be committed and diffed. Two figures: a bar
//! chart over the fault-count histogram and a step line over the sorted
//! lifespan series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN: f64 = 46.0;

/// The full report figure: fault counts per version on top, the sorted
/// lifespan series below. `series` must already be in report order
/// (days non-increasing); the renderer does not reorder it.
pub fn report_svg(hist: &BTreeMap<usize, usize>, series: &[i64]) -> String {
    let height = 2.0 * PANEL_HEIGHT;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    histogram_panel(&mut out, 0.0, hist);
    series_panel(&mut out, PANEL_HEIGHT, series);
    out.push_str("</svg>\n");
    out
}

/// The lifespan figure alone, as one panel.
pub fn series_svg(series: &[i64]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{PANEL_HEIGHT:.0}\" viewBox=\"0 0 {WIDTH:.0} {PANEL_HEIGHT:.0}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    series_panel(&mut out, 0.0, series);
    out.push_str("</svg>\n");
    out
}

fn histogram_panel(out: &mut String, y0: f64, hist: &BTreeMap<usize, usize>) {
    let Some(frame) = frame(out, y0, "Faults per version", hist.is_empty()) else {
        return;
    };
    let max = hist.values().map(|&v| v as f64).fold(0.0f64, f64::max).max(1.0);
    let slot = frame.plot_w / hist.len() as f64;
    let bar_w = (slot * 0.8).min(48.0);

    for (i, (_, &v)) in hist.iter().enumerate() {
        let h = frame.plot_h * v as f64 / max;
        if h > 0.0 {
            let x = frame.left + i as f64 * slot + (slot - bar_w) / 2.0;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" fill=\"#4878a8\"/>",
                frame.baseline - h
            );
        }
    }
    frame.axes(out, max);

    if hist.len() <= 16 {
        for (i, (count, _)) in hist.iter().enumerate() {
            let x = frame.left + (i as f64 + 0.5) * slot;
            let _ = writeln!(
                out,
                "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#333333\">{count}</text>",
                frame.baseline + 16.0
            );
        }
    }
}

fn series_panel(out: &mut String, y0: f64, series: &[i64]) {
    let Some(frame) = frame(out, y0, "Sorted fault lifespan in days", series.is_empty()) else {
        return;
    };
    let max = series.iter().map(|&d| d as f64).fold(0.0f64, f64::max).max(1.0);
    let step = frame.plot_w / series.len() as f64;

    // One horizontal tread per fault, connected into a step line.
    let mut points = String::new();
    for (i, &days) in series.iter().enumerate() {
        let y = frame.baseline - frame.plot_h * days as f64 / max;
        let x0 = frame.left + i as f64 * step;
        let x1 = frame.left + (i + 1) as f64 * step;
        let _ = write!(points, "{x0:.1},{y:.1} {x1:.1},{y:.1} ");
    }
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#a85048\" stroke-width=\"1.5\"/>",
        points.trim_end()
    );
    frame.axes(out, max);
}

struct Frame {
    left: f64,
    top: f64,
    plot_w: f64,
    plot_h: f64,
    baseline: f64,
}

impl Frame {
    fn axes(&self, out: &mut String, max: f64) {
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333333\"/>",
            self.left,
            self.baseline,
            self.left + self.plot_w,
            self.baseline
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" fill=\"#666666\">{max:.0}</text>",
            self.left - 6.0,
            self.top + 4.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" fill=\"#666666\">0</text>",
            self.left - 6.0,
            self.baseline
        );
    }
}

/// Writes the panel title (and the empty-data note when there is
/// nothing to draw, returning `None` in that case).
fn frame(out: &mut String, y0: f64, title: &str, empty: bool) -> Option<Frame> {
    let left = MARGIN;
    let top = y0 + MARGIN;
    let plot_h = PANEL_HEIGHT - 2.0 * MARGIN;
    let _ = writeln!(
        out,
        "<text x=\"{left:.1}\" y=\"{:.1}\" font-weight=\"bold\">{}</text>",
        y0 + 24.0,
        escape(title)
    );
    if empty {
        let _ = writeln!(
            out,
            "<text x=\"{left:.1}\" y=\"{:.1}\" fill=\"#666666\">no data</text>",
            top + plot_h / 2.0
        );
        return None;
    }
    Some(Frame {
        left,
        top,
        plot_w: WIDTH - 2.0 * MARGIN,
        plot_h,
        baseline: top + plot_h,
    })
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
