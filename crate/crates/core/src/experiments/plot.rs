//! Minimal SVG line charts with fixed-precision output, so that identical
//! inputs always render to identical bytes.

use std::fmt::Write;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Roughly five round-numbered ticks covering `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let span = (hi - lo).max(hi.abs() * 1e-9).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    let ticks = (0..=n).map(|i| start + i as f64 * step).collect();
    (start, end, ticks)
}

impl LinePlot {
    pub fn render(&self) -> Result<String> {
        let points: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || y > 0.0))
            .collect();
        if points.is_empty() {
            return Err(Error::EmptySelection(format!("plot {:?} has no drawable points", self.title)));
        }
        let (xmin, xmax) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (ymin, ymax) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let (x0, x1, xticks) = linear_ticks(xmin, xmax);
        let (y0, y1, yticks) = if self.log_y {
            let lo = ymin.log10().floor();
            let hi = ymax.log10().ceil().max(lo + 1.0);
            let ticks = (lo as i32..=hi as i32).map(|e| 10f64.powi(e)).collect();
            (lo, hi, ticks)
        } else {
            linear_ticks(ymin.min(0.0), ymax)
        };
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * plot_w;
        let py = |y: f64| {
            let v = if self.log_y { y.log10() } else { y };
            TOP + plot_h - (v - y0) / (y1 - y0).max(f64::MIN_POSITIVE) * plot_h
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
        let _ = writeln!(s, r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}"/>"#);
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="ticks">"#);
        for &t in &xticks {
            let x = px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + plot_h,
                TOP + plot_h + 5.0,
                TOP + plot_h + 20.0,
                tick_label(t)
            );
        }
        for &t in &yticks {
            let y = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + plot_w,
                LEFT - 6.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (idx, series) in self.series.iter().enumerate() {
            let color = COLORS[idx % COLORS.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|&&(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || y > 0.0))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(s, r#"<g class="series" data-name="{}">"#, escape(&series.name));
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
            for p in &pts {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
            let _ = writeln!(s, "</g>");
        }

        let _ = writeln!(s, r#"<g class="legend">"#);
        for (idx, series) in self.series.iter().enumerate() {
            let color = COLORS[idx % COLORS.len()];
            let y = TOP + 10.0 + 20.0 * idx as f64;
            let x = LEFT + plot_w + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 20.0,
                x + 26.0,
                y + 4.0,
                escape(&series.name)
            );
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(log_y: bool) -> LinePlot {
        LinePlot {
            title: "t".into(),
            x_label: "density".into(),
            y_label: "y".into(),
            log_y,
            series: vec![
                Series { name: "qiu".into(), points: vec![(0.1, 300.0), (0.5, 120.0), (0.9, 40.0)] },
                Series { name: "sobolev".into(), points: vec![(0.1, 250.0), (0.5, 90.0), (0.9, 35.0)] },
            ],
        }
    }

    #[test]
    fn two_series_with_legend() {
        let svg = plot(true).render().unwrap();
        assert_eq!(svg.matches(r#"<g class="series""#).count(), 2);
        assert_eq!(svg.matches(r#"<g class="legend">"#).count(), 1);
        assert!(svg.contains(">qiu</text>") && svg.contains(">sobolev</text>"));
        assert!(svg.contains(">10</text>") && svg.contains(">1000</text>"));
        assert_eq!(svg, plot(true).render().unwrap());
    }

    #[test]
    fn empty_plot_refused() {
        let mut p = plot(false);
        p.series.clear();
        assert!(p.render().is_err());
    }

    #[test]
    fn ticks_cover_range() {
        let (lo, hi, t) = linear_ticks(0.1, 0.9);
        assert!(lo <= 0.1 && hi >= 0.9 && t.len() >= 3);
    }
}
