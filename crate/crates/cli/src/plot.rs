//! Minimal deterministic SVG line charts.

use std::fmt::Write;

use irsir::timeseries::WeekStamp;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Data,
    Fit,
    Early,
    Late,
}

impl LineStyle {
    fn attrs(self) -> &'static str {
        match self {
            LineStyle::Data => r##"stroke="#555555" stroke-width="1""##,
            LineStyle::Fit => r##"stroke="#1f77b4" stroke-width="2""##,
            LineStyle::Early => r##"stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4""##,
            LineStyle::Late => r##"stroke="#2ca02c" stroke-width="1.5" stroke-dasharray="6 4""##,
        }
    }
}

pub struct Line<'a> {
    pub label: &'a str,
    pub values: Vec<f64>,
    pub style: LineStyle,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the lines against a shared weekly axis starting at `start`.
/// Coordinates are printed with two decimals so output is byte-stable.
pub fn render(title: &str, start: WeekStamp, lines: &[Line<'_>]) -> String {
    let weeks = lines.iter().map(|l| l.values.len()).max().unwrap_or(0).max(2);
    let y_max = lines
        .iter()
        .flat_map(|l| l.values.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |k: usize| LEFT + plot_w * k as f64 / (weeks - 1) as f64;
    let y_of = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, y_max) / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );

    // January ticks.
    let mut last_year = None;
    for k in 0..weeks {
        let stamp = start.add_weeks(k as i64);
        let year = stamp.date().format("%Y").to_string();
        if last_year.as_ref() != Some(&year) {
            if last_year.is_some() {
                let x = x_of(k);
                let _ = writeln!(
                    s,
                    r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                    TOP + plot_h
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{year}</text>"#,
                    HEIGHT - BOTTOM + 14.0
                );
            }
            last_year = Some(year);
        }
    }
    for frac in [0.0, 0.5, 1.0] {
        let v = y_max * frac;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.1}</text>"#,
            LEFT - 4.0,
            y_of(v) + 3.0
        );
    }

    for (n, line) in lines.iter().enumerate() {
        let mut points = String::new();
        for (k, v) in line.values.iter().enumerate().filter(|(_, v)| v.is_finite()) {
            let _ = write!(points, "{:.2},{:.2} ", x_of(k), y_of(*v));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" {} points="{}"/>"#,
            line.style.attrs(),
            points.trim_end()
        );
        let ly = TOP + 14.0 + 14.0 * n as f64;
        let lx = LEFT + plot_w - 110.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {}/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            line.style.attrs()
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 26.0,
            escape(line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic_and_well_formed() {
        let start: WeekStamp = "2004-01-03".parse().unwrap();
        let lines = [
            Line { label: "data", values: (0..120).map(|k| k as f64).collect(), style: LineStyle::Data },
            Line { label: "a<b", values: vec![1.0, f64::NAN, 3.0], style: LineStyle::Late },
        ];
        let a = render("t & t", start, &lines);
        let b = render("t & t", start, &lines);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("t &amp; t") && a.contains("a&lt;b"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains(">2005<") && a.contains(">2006<"));
    }
}
