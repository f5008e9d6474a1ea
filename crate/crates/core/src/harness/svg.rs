//! Minimal static line plots: axes, polylines, point markers and labels.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A labelled point drawn on top of the series.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
            markers: Vec::new(),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
        });
        self
    }

    pub fn with_marker(mut self, x: f64, y: f64, label: &str) -> Self {
        self.markers.push(Marker {
            x,
            y,
            label: label.into(),
        });
        self
    }

    fn transform(&self, (x, y): (f64, f64)) -> Option<(f64, f64)> {
        let tx = if self.log_x { x.log10() } else { x };
        let ty = if self.log_y { y.log10() } else { y };
        (tx.is_finite() && ty.is_finite()).then_some((tx, ty))
    }

    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.markers.iter().map(|m| (m.x, m.y)))
            .filter_map(|p| self.transform(p))
            .collect();
        let (x0, x1) = padded_range(pts.iter().map(|p| p.0));
        let (y0, y1) = padded_range(pts.iter().map(|p| p.1));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP,
                TOP + ph,
                TOP + ph + 16.0,
                tick_label(t, self.log_x)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                tick_label(t, self.log_y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&axis_label(&self.x_label, self.log_x))
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&axis_label(&self.y_label, self.log_y))
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let coords: Vec<String> = s
                .points
                .iter()
                .filter_map(|&p| self.transform(p))
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if coords.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            if s.points.len() <= 40 {
                for c in &coords {
                    let (x, y) = c.split_once(',').expect("formatted pair");
                    let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
                }
            }
            let ly = TOP + 14.0 + 15.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT + pw - 24.0,
                ly - 4.0,
                LEFT + pw - 8.0,
                ly - 4.0,
                LEFT + pw - 28.0,
                ly,
                escape(&s.label)
            );
        }
        for m in &self.markers {
            if let Some((x, y)) = self.transform((m.x, m.y)) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4.5" fill="none" stroke="black" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    sx(x),
                    sy(y),
                    sx(x) + 7.0,
                    sy(y) - 7.0,
                    escape(&m.label)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-3);
        return (lo - pad, hi + pad);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(t: f64, log: bool) -> String {
    let v = if log { 10f64.powf(t) } else { t };
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn axis_label(label: &str, log: bool) -> String {
    if log {
        format!("{label} (log scale)")
    } else {
        label.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_markers_and_labels() {
        let svg = Plot::new("slack <vs> h", "h", "slack")
            .log_log()
            .with_series("p=2", vec![(0.04, 0.7), (0.02, 0.69), (0.01, 0.68)])
            .with_marker(0.02, 0.69, "mid")
            .render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("slack &lt;vs&gt; h"));
        assert!(svg.contains(">mid<"));
        assert!(svg.contains("(log scale)"));
    }

    #[test]
    fn degenerate_and_empty_plots_still_render() {
        let one = Plot::new("one", "x", "y")
            .with_series("s", vec![(1.0, 1.0)])
            .render();
        assert!(one.contains("<circle"));
        let none = Plot::new("none", "x", "y").render();
        assert!(none.contains("</svg>"));
        let nonpositive = Plot::new("log", "x", "y")
            .log_log()
            .with_series("s", vec![(0.0, 1.0), (1.0, -1.0)])
            .render();
        assert!(!nonpositive.contains("NaN"));
    }

    #[test]
    fn ticks_cover_the_range() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.first(), Some(&0.0));
        assert!((t.last().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(tick_label(-2.0, true), "0.01");
    }
}
