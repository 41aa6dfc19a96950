//! Minimal static SVG line and grouped-bar charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        MARGIN_TOP + Self::plot_h() * (1.0 - (v - self.y_min) / span)
    }

    fn open(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let _ = write!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + Self::plot_w() / 2.0,
            escape(title)
        );
        let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + Self::plot_h());
        let _ = write!(
            out,
            r#"<path d="M{x0} {MARGIN_TOP} L{x0} {y0} L{} {y0}" stroke="black" fill="none"/>"#,
            x0 + Self::plot_w()
        );
        for i in 0..=4 {
            let v = self.y_min + (self.y_max - self.y_min) * i as f64 / 4.0;
            let y = self.y(v);
            let _ = write!(
                out,
                r#"<path d="M{} {y:.1} L{x0} {y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
                x0 - 4.0,
                x0 - 6.0,
                y + 4.0
            );
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + Self::plot_w() / 2.0,
            HEIGHT - 10.0,
            escape(x_label)
        );
        let _ = write!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            MARGIN_TOP + Self::plot_h() / 2.0,
            escape(y_label)
        );
    }

    fn legend(out: &mut String, names: &[&str]) {
        let x = WIDTH - MARGIN_RIGHT + 12.0;
        for (i, name) in names.iter().enumerate() {
            let y = MARGIN_TOP + 18.0 * i as f64;
            let _ = write!(
                out,
                r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                COLORS[i % COLORS.len()],
                x + 16.0,
                y + 10.0,
                escape(name)
            );
        }
    }
}

fn y_range(series: &[Series]) -> (f64, f64) {
    let values = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    // accuracies and shares live in [0, 1]
    if lo >= 0.0 && hi <= 1.0 {
        (0.0, 1.0)
    } else {
        (lo.min(0.0), hi)
    }
}

/// Series drawn as polylines over shared x positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub series: Vec<Series>,
}

impl LineChart {
    pub fn render(&self) -> String {
        let (y_min, y_max) = y_range(&self.series);
        let frame = Frame { y_min, y_max };
        let mut out = String::new();
        frame.open(&mut out, &self.title, &self.x_label, &self.y_label);
        let (x_lo, x_hi) = self
            .x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = (x_hi - x_lo).max(1e-12);
        let px = |v: f64| MARGIN_LEFT + Frame::plot_w() * (v - x_lo) / span;
        for &v in &self.x {
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{v}</text>"#,
                px(v),
                MARGIN_TOP + Frame::plot_h() + 16.0
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let points: Vec<String> = self
                .x
                .iter()
                .zip(&s.values)
                .filter(|(_, v)| v.is_finite())
                .map(|(&x, &v)| format!("{:.1},{:.1}", px(x), frame.y(v)))
                .collect();
            let _ = write!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                points.join(" "),
                COLORS[i % COLORS.len()]
            );
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.name.as_str()).collect();
        Frame::legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

/// One bar per series within each category.
#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
}

impl BarChart {
    pub fn render(&self) -> String {
        let (y_min, y_max) = y_range(&self.series);
        let frame = Frame { y_min, y_max };
        let mut out = String::new();
        frame.open(&mut out, &self.title, &self.x_label, &self.y_label);
        let n_cat = self.categories.len().max(1) as f64;
        let slot = Frame::plot_w() / n_cat;
        let bar = slot * 0.8 / self.series.len().max(1) as f64;
        for (c, cat) in self.categories.iter().enumerate() {
            let left = MARGIN_LEFT + slot * c as f64 + slot * 0.1;
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                left + slot * 0.4,
                MARGIN_TOP + Frame::plot_h() + 16.0,
                escape(cat)
            );
            for (i, s) in self.series.iter().enumerate() {
                let Some(&v) = s.values.get(c).filter(|v| v.is_finite()) else {
                    continue;
                };
                let (top, base) = (frame.y(v.max(y_min)), frame.y(y_min.max(0.0)));
                let _ = write!(
                    out,
                    r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                    left + bar * i as f64,
                    top.min(base),
                    bar,
                    (base - top).abs(),
                    COLORS[i % COLORS.len()]
                );
            }
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.name.as_str()).collect();
        Frame::legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_has_one_polyline_per_series() {
        let chart = LineChart {
            title: "a & b".into(),
            x_label: "bucket".into(),
            y_label: "accuracy".into(),
            x: vec![1.0, 2.0, 3.0],
            series: vec![Series::new("x", vec![0.2, 0.5, 0.9]), Series::new("y", vec![0.9, f64::NAN, 0.1])],
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &amp; b"));
        assert_eq!(svg, chart.render());
    }

    #[test]
    fn bar_chart_skips_missing_values() {
        let chart = BarChart {
            title: "t".into(),
            x_label: String::new(),
            y_label: String::new(),
            categories: vec!["a".into(), "b".into()],
            series: vec![Series::new("s", vec![0.4, f64::NAN])],
        };
        // one legend swatch, one bar, one background
        assert_eq!(chart.render().matches("<rect").count(), 3);
    }
}
