//! Minimal SVG line plots: framed axes with ticks, polylines and point
//! markers. Output depends only on the data, so reruns are byte-identical.

use std::fmt::Write;

pub const BLUE: &str = "#1f77b4";
pub const ORANGE: &str = "#ff7f0e";
pub const GRAY: &str = "#999999";
pub const RED: &str = "#d62728";

/// Colors cycled by family overlays.
pub const PALETTE: [&str; 6] = [BLUE, ORANGE, "#2ca02c", RED, "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Disconnected polyline pieces.
    pub paths: Vec<Vec<[f64; 2]>>,
    pub markers: Vec<[f64; 2]>,
    pub color: String,
    pub width: f64,
    pub dashed: bool,
}

impl Series {
    pub fn line(points: Vec<[f64; 2]>, color: &str) -> Self {
        Self { paths: vec![points], markers: Vec::new(), color: color.into(), width: 1.5, dashed: false }
    }

    pub fn with_markers(mut self, markers: Vec<[f64; 2]>) -> Self {
        self.markers = markers;
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self.width = 1.0;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed ranges; fitted to the data when `None`.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    /// Same scale on both axes.
    pub equal_aspect: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            x_range: None,
            y_range: None,
            equal_aspect: false,
        }
    }

    fn data_range(&self, axis: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.series {
            for p in s.paths.iter().flatten().chain(&s.markers) {
                if p[axis].is_finite() {
                    lo = lo.min(p[axis]);
                    hi = hi.max(p[axis]);
                }
            }
        }
        if !(lo <= hi) {
            return (-1.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-3);
        (lo - pad, hi + pad)
    }

    pub fn render(&self) -> String {
        let (mut x0, mut x1) = self.x_range.unwrap_or_else(|| self.data_range(0));
        let (mut y0, mut y1) = self.y_range.unwrap_or_else(|| self.data_range(1));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        if self.equal_aspect {
            let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
            let (cx, cy) = ((x0 + x1) * 0.5, (y0 + y1) * 0.5);
            x0 = cx - scale * pw * 0.5;
            x1 = cx + scale * pw * 0.5;
            y0 = cy - scale * ph * 0.5;
            y1 = cy + scale * ph * 0.5;
        }
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(out, r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw * 0.5,
            escape(&self.title)
        );

        let xs = nice_step(x1 - x0);
        let ys = nice_step(y1 - y0);
        let mut v = (x0 / xs).ceil() * xs;
        while v <= x1 + 1e-9 * xs {
            let x = sx(v);
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eeeeee"/>"##, TOP + ph);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, fmt_tick(v, xs));
            v += xs;
        }
        let mut v = (y0 / ys).ceil() * ys;
        while v <= y1 + 1e-9 * ys {
            let y = sy(v);
            let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eeeeee"/>"##, LEFT + pw);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, fmt_tick(v, ys));
            v += ys;
        }
        let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw * 0.5,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph * 0.5,
            TOP + ph * 0.5,
            escape(&self.y_label)
        );

        let _ = writeln!(out, r#"<g clip-path="url(#plot)" fill="none">"#);
        for s in &self.series {
            let dash = if s.dashed { r#" stroke-dasharray="5,4""# } else { "" };
            for path in &s.paths {
                let pts: Vec<String> = path
                    .iter()
                    .filter(|p| p[0].is_finite() && p[1].is_finite())
                    .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
                    .collect();
                if pts.len() >= 2 {
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" stroke="{}" stroke-width="{}"{dash}/>"#,
                        pts.join(" "),
                        s.color,
                        s.width
                    );
                }
            }
            for m in &s.markers {
                if m[0].is_finite() && m[1].is_finite() {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#, sx(m[0]), sy(m[1]), s.color);
                }
            }
        }
        out.push_str("</g>\n</svg>\n");
        out
    }
}

/// Splits a configuration path into pieces wrapped into `[−π, π)²`, breaking
/// wherever a coordinate wraps around.
pub fn torus_pieces(points: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    let mut pieces: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for p in points {
        let w = [wrap(p[0]), wrap(p[1])];
        if let Some(last) = cur.last() {
            if (w[0] - last[0]).abs() > std::f64::consts::PI || (w[1] - last[1]).abs() > std::f64::consts::PI {
                pieces.push(std::mem::take(&mut cur));
            }
        }
        cur.push(w);
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces
}
