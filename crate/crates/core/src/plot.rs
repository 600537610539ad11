//! Minimal self-contained SVG plots.
//!
//! Output depends only on the input numbers: coordinates are printed with fixed
//! precision and no timestamps or random ids are emitted.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::markov::LdpReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    /// Logarithmic y axis; non-positive values are dropped.
    Semilog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    Dashed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub kind: PlotKind,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 0.5 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64, integer: bool) -> Vec<f64> {
    let step = if integer { nice_step(hi - lo).max(1.0).round() } else { nice_step(hi - lo) };
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders the plot. Errors when there is no plottable point.
pub fn emit_plot(plot: &Plot) -> Result<String> {
    let ty = |y: f64| match plot.kind {
        PlotKind::Line => Some(y),
        PlotKind::Semilog => (y > 0.0).then(|| y.log10()),
    };
    let series: Vec<(&Series, Vec<(f64, f64)>)> = plot
        .series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .filter_map(|&(x, y)| ty(y).map(|v| (x, v)))
                .collect();
            (s, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::arg("nothing to plot"));
    }
    let (x0, x1) = padded(
        all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (mut y0, mut y1) = padded(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    if plot.kind == PlotKind::Semilog {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&plot.title));
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x0, x1, false) {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
            sx(t),
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(t)
        );
    }
    for t in ticks(y0, y1, plot.kind == PlotKind::Semilog) {
        let label = match plot.kind {
            PlotKind::Line => tick_label(t),
            PlotKind::Semilog => format!("1e{}", t as i64),
        };
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{LEFT}" y2="{1:.2}" stroke="black"/><text x="{2:.2}" y="{3:.2}" text-anchor="end">{4}</text>"#,
            LEFT - 5.0,
            sy(t),
            LEFT - 8.0,
            sy(t) + 4.0,
            label
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    for (k, (s, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let single = pts.len() == 1;
        match s.style {
            Style::Line | Style::Dashed if !single => {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    path.join(" ")
                );
            }
            _ => {
                for &(x, y) in pts {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            W - RIGHT - 200.0,
            W - RIGHT - 180.0,
            W - RIGHT - 175.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One curve with default labels.
pub fn curve_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], kind: PlotKind) -> Result<String> {
    emit_plot(&Plot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        kind,
        series: vec![Series {
            name: y_label.into(),
            points: points.to_vec(),
            style: Style::Line,
        }],
    })
}

/// Empirical probabilities on a log axis with the fitted exponential and its constants in the legend.
pub fn ldp_svg(report: &LdpReport) -> Result<String> {
    let pts: Vec<(f64, f64)> = report.n_values.iter().zip(&report.probabilities).map(|(&n, &p)| (n as f64, p)).collect();
    let mut series = vec![Series {
        name: format!("P(deviation > {})", report.eps),
        points: pts,
        style: Style::Markers,
    }];
    if let (Some(c1), Some(c2)) = (report.c1, report.c2) {
        let lo = *report.n_values.iter().min().unwrap_or(&0) as f64;
        let hi = *report.n_values.iter().max().unwrap_or(&0) as f64;
        let e2 = report.eps * report.eps;
        let line = (0..=20)
            .map(|i| {
                let n = lo + (hi - lo) * i as f64 / 20.0;
                (n, c1 * (-c2 * n * e2).exp())
            })
            .collect();
        series.push(Series {
            name: format!("fit c1={c1:.4}, c2={c2:.4}"),
            points: line,
            style: Style::Dashed,
        });
    }
    emit_plot(&Plot {
        title: format!("Deviation probabilities ({} trials)", report.trials),
        x_label: "n".into(),
        y_label: "probability".into(),
        kind: PlotKind::Semilog,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_one_marker() {
        let svg = curve_svg("t", "x", "y", &[(1.0, 2.0)], PlotKind::Line).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn empty_data_is_rejected() {
        assert!(curve_svg("t", "x", "y", &[], PlotKind::Line).is_err());
        assert!(curve_svg("t", "x", "y", &[(1.0, 0.0)], PlotKind::Semilog).is_err());
    }

    #[test]
    fn byte_stable_and_escaped() {
        let pts: Vec<(f64, f64)> = (1..10).map(|n| (n as f64, 1.0 / n as f64)).collect();
        let a = curve_svg("a < b & c", "n", "deviation", &pts, PlotKind::Line).unwrap();
        let b = curve_svg("a < b & c", "n", "deviation", &pts, PlotKind::Line).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("a &lt; b &amp; c"));
        assert!(a.contains("<polyline"));
    }

    #[test]
    fn ldp_legend_carries_fit() {
        let rep = LdpReport {
            eps: 0.1,
            n_values: vec![10, 20, 40],
            probabilities: vec![0.5, 0.2, 0.0],
            std_errors: vec![0.0; 3],
            c1: Some(1.25),
            c2: Some(4.5),
            r_squared: Some(1.0),
            trials: 100,
            trace_net_size: 1,
            nucleus_size: None,
            warnings: vec![],
        };
        let svg = ldp_svg(&rep).unwrap();
        assert!(svg.contains("c1=1.2500, c2=4.5000"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("1e-1"));
    }
}
