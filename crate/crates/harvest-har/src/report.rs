//! SVG emission: per-fold prediction overlays and cross-validation
//! box-whisker summaries.
//!
//! Plots are plain SVG text written by hand; there is no rendering
//! dependency and identical inputs produce byte-identical files. The fold
//! overlay stacks the four sensor channels with the truth labels and the
//! model's probability trace (data in blue, predictions in orange); the
//! box plot shows quartile boxes with 1.5 IQR whiskers per metric.

use std::fmt::Write as _;

use crate::data::MultiStreamSeries;
use crate::error::{Error, Result};
use crate::eval::WindowPrediction;

const DATA_COLOR: &str = "#1f77b4";
const PREDICTION_COLOR: &str = "#ff7f0e";

// ---------------------------------------------------------------------------
// Quantiles and box statistics
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile (the "type 7" rule: rank h = (n-1)q).
pub fn quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InsufficientData("quantile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("quantile {q} outside [0,1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Five-number box summary with 1.5 IQR whiskers clamped to observed
/// values; points beyond the whiskers are fliers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub fliers: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InsufficientData("box statistics of an empty set".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let q1 = quantile(&sorted, 0.25)?;
    let median = quantile(&sorted, 0.5)?;
    let q3 = quantile(&sorted, 0.75)?;
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    // Whiskers reach the most extreme values inside the fences and never
    // retreat past the box itself.
    let whisker_lo = sorted.iter().copied().find(|&v| v >= lo_fence).unwrap_or(q1).min(q1);
    let whisker_hi = sorted.iter().rev().copied().find(|&v| v <= hi_fence).unwrap_or(q3).max(q3);
    let fliers = sorted.iter().copied().filter(|&v| v < lo_fence || v > hi_fence).collect();
    Ok(BoxStats { q1, median, q3, whisker_lo, whisker_hi, fliers })
}

// ---------------------------------------------------------------------------
// SVG primitives
// ---------------------------------------------------------------------------

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Svg { body: String::new(), width, height }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width:.2}"/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, stroke: &str, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" stroke="{stroke}" fill="{fill}"/>"#
        );
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{color}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" font-family="sans-serif">{escaped}</text>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        let mut attr = String::with_capacity(points.len() * 12);
        for (x, y) in points {
            let _ = write!(attr, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width:.2}"/>"#,
            attr.trim_end()
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n<rect x=\"0\" y=\"0\" width=\"{:.0}\" height=\"{:.0}\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Downsamples a channel to at most `max_points` (min/max per bucket keeps
/// the envelope visible) and maps it into the panel rectangle.
fn channel_polyline(
    values: &[f64],
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    max_points: usize,
) -> Vec<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if max <= min {
        max = min + 1.0;
    }
    let map_y = |v: f64| y0 + h - (v - min) / (max - min) * h;
    let mut points = Vec::new();
    if n <= max_points {
        for (i, &v) in values.iter().enumerate() {
            points.push((x0 + i as f64 / (n - 1).max(1) as f64 * w, map_y(v)));
        }
    } else {
        let buckets = max_points / 2;
        for b in 0..buckets {
            let lo = b * n / buckets;
            let hi = ((b + 1) * n / buckets).max(lo + 1);
            let slice = &values[lo..hi];
            let mut bmin = f64::INFINITY;
            let mut bmax = f64::NEG_INFINITY;
            for &v in slice {
                bmin = bmin.min(v);
                bmax = bmax.max(v);
            }
            let x = x0 + (lo + hi) as f64 / 2.0 / n as f64 * w;
            points.push((x, map_y(bmax)));
            points.push((x, map_y(bmin)));
        }
    }
    points
}

// ---------------------------------------------------------------------------
// Fold overlay plot
// ---------------------------------------------------------------------------

/// Renders one fold's overlay: the four channels of the held-out stretch
/// (blue), then a panel with the truth labels (blue) and the prediction
/// probability trace (orange). `window_width` maps window indices back to
/// sample coordinates.
pub fn render_fold_overlay(
    series: &MultiStreamSeries,
    trace: &[WindowPrediction],
    window_width: usize,
    title: &str,
) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::InsufficientData("empty prediction trace".into()));
    }
    let first_window = trace[0].window;
    let last_window = trace[trace.len() - 1].window;
    let s_lo = first_window * window_width;
    let s_hi = ((last_window + 1) * window_width).min(series.len());
    if s_lo >= s_hi {
        return Err(Error::Bounds { from: s_lo, to: s_hi, len: series.len() });
    }

    let width = 900.0;
    let panel_h = 80.0;
    let gap = 14.0;
    let margin_l = 60.0;
    let margin_t = 30.0;
    let panels = 5.0;
    let height = margin_t + panels * (panel_h + gap) + 30.0;
    let mut svg = Svg::new(width, height);
    svg.text(margin_l, 18.0, 13.0, title);

    let plot_w = width - margin_l - 20.0;
    for c in 0..4 {
        let y0 = margin_t + c as f64 * (panel_h + gap);
        let values = &series.channel(c)[s_lo..s_hi];
        svg.rect(margin_l, y0, plot_w, panel_h, "#cccccc", "none");
        svg.text(8.0, y0 + panel_h / 2.0, 11.0, crate::data::CHANNEL_NAMES[c]);
        let pts = channel_polyline(values, margin_l, y0, plot_w, panel_h, 2000);
        svg.polyline(&pts, DATA_COLOR, 0.8);
    }

    // Probability panel: truth as a step curve in blue, probability in
    // orange, both on a [0,1] axis.
    let y0 = margin_t + 4.0 * (panel_h + gap);
    svg.rect(margin_l, y0, plot_w, panel_h, "#cccccc", "none");
    svg.text(8.0, y0 + panel_h / 2.0, 11.0, "p(event)");
    let map_x = |window: usize| -> f64 {
        margin_l + (window - first_window) as f64 / (last_window - first_window).max(1) as f64 * plot_w
    };
    let map_y = |v: f64| y0 + panel_h - v.clamp(0.0, 1.0) * panel_h;
    let mut truth_pts = Vec::with_capacity(trace.len() * 2);
    let mut prob_pts = Vec::with_capacity(trace.len());
    for t in trace {
        let x = map_x(t.window);
        let truth = f64::from(t.truth >= 0.5);
        if let Some(&(_, prev_y)) = truth_pts.last() {
            truth_pts.push((x, prev_y));
        }
        truth_pts.push((x, map_y(truth)));
        prob_pts.push((x, map_y(t.probability)));
    }
    svg.polyline(&truth_pts, DATA_COLOR, 1.2);
    svg.polyline(&prob_pts, PREDICTION_COLOR, 1.2);
    svg.text(margin_l, height - 8.0, 11.0, &format!("samples {s_lo}..{s_hi}"));
    Ok(svg.finish())
}

// ---------------------------------------------------------------------------
// Box-whisker plot
// ---------------------------------------------------------------------------

/// Renders a box-whisker panel: one box per named metric over its per-fold
/// values.
pub fn render_box_plot(metrics: &[(&str, Vec<f64>)], title: &str) -> Result<String> {
    if metrics.is_empty() || metrics.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::InsufficientData("no metric values to plot".into()));
    }
    let width = 520.0;
    let height = 320.0;
    let margin_l = 50.0;
    let margin_t = 40.0;
    let plot_w = width - margin_l - 20.0;
    let plot_h = height - margin_t - 50.0;
    let mut svg = Svg::new(width, height);
    svg.text(margin_l, 20.0, 13.0, title);
    svg.rect(margin_l, margin_t, plot_w, plot_h, "#cccccc", "none");

    // Vertical axis fixed to [0, 1] with 0.2 gridlines.
    let map_y = |v: f64| margin_t + plot_h - v.clamp(0.0, 1.0) * plot_h;
    for tick in 0..=5 {
        let v = tick as f64 * 0.2;
        let y = map_y(v);
        svg.line(margin_l - 4.0, y, margin_l, y, "#888888", 1.0);
        svg.text(10.0, y + 4.0, 10.0, &format!("{v:.1}"));
    }

    let slot = plot_w / metrics.len() as f64;
    let box_w = slot * 0.4;
    for (i, (name, values)) in metrics.iter().enumerate() {
        let cx = margin_l + slot * (i as f64 + 0.5);
        let stats = box_stats(values)?;
        let (bx, bw) = (cx - box_w / 2.0, box_w);
        svg.line(cx, map_y(stats.whisker_lo), cx, map_y(stats.q1), "#333333", 1.0);
        svg.line(cx, map_y(stats.q3), cx, map_y(stats.whisker_hi), "#333333", 1.0);
        svg.line(bx, map_y(stats.whisker_lo), bx + bw, map_y(stats.whisker_lo), "#333333", 1.0);
        svg.line(bx, map_y(stats.whisker_hi), bx + bw, map_y(stats.whisker_hi), "#333333", 1.0);
        svg.rect(
            bx,
            map_y(stats.q3),
            bw,
            (map_y(stats.q1) - map_y(stats.q3)).max(0.5),
            "#333333",
            "#aec7e8",
        );
        svg.line(bx, map_y(stats.median), bx + bw, map_y(stats.median), PREDICTION_COLOR, 2.0);
        for &f in &stats.fliers {
            svg.circle(cx, map_y(f), 2.0, "#333333");
        }
        svg.text(cx - 18.0, height - 18.0, 11.0, name);
    }
    Ok(svg.finish())
}
