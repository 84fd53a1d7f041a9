//! Minimal stacked line charts written straight to SVG. The CSV files hold
//! the data; these are for a quick look.

use std::fmt::Write;

const WIDTH: f64 = 820.0;
const PANEL_HEIGHT: f64 = 300.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 34.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    /// Vertical reference lines `(x, label)`.
    pub vlines: Vec<(f64, String)>,
    /// Horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e5 || v.abs() < 1e-3 {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn render_panel(out: &mut String, p: &Panel, y0: f64) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = PANEL_HEIGHT - TOP - BOTTOM;
    let fx = |x: f64| if p.log_x { x.log10() } else { x };
    let pts = || p.series.iter().flat_map(|s| s.points.iter());
    let (mut xlo, mut xhi) = range(pts().filter(|q| !p.log_x || q.0 > 0.0).map(|q| fx(q.0))).unwrap_or((0.0, 1.0));
    let (mut ylo, mut yhi) = range(pts().map(|q| q.1).chain(p.hlines.iter().map(|h| h.0))).unwrap_or((0.0, 1.0));
    if xhi <= xlo {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if yhi <= ylo {
        ylo -= 0.5 * ylo.abs().max(1.0);
        yhi += 0.5 * yhi.abs().max(1.0);
    }
    let pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
    let sx = |x: f64| LEFT + (fx(x) - xlo) / (xhi - xlo) * plot_w;
    let sy = |y: f64| y0 + TOP + (yhi - y) / (yhi - ylo) * plot_h;

    let _ = writeln!(out, r##"<rect x="{LEFT:.2}" y="{:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##, y0 + TOP);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, y0 + TOP - 12.0, escape(&p.title));

    // x ticks
    let xticks: Vec<(f64, String)> = if p.log_x {
        (xlo.ceil() as i64..=xhi.floor() as i64).map(|d| (10f64.powi(d as i32), tick_label(10f64.powi(d as i32)))).collect()
    } else {
        linear_ticks(xlo, xhi).into_iter().map(|v| (v, tick_label(v))).collect()
    };
    for (x, label) in xticks {
        let px = sx(x);
        let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/>"##, y0 + TOP, y0 + TOP + plot_h);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"#, y0 + TOP + plot_h + 16.0);
    }
    for y in linear_ticks(ylo, yhi) {
        let py = sy(y);
        let _ = writeln!(out, r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/>"##, LEFT + plot_w);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#, LEFT - 6.0, py + 4.0, tick_label(y));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#, LEFT + plot_w / 2.0, y0 + PANEL_HEIGHT - 10.0, escape(&p.x_label));
    let (lx, ly) = (18.0, y0 + TOP + plot_h / 2.0);
    let _ = writeln!(out, r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#, escape(&p.y_label));

    for (y, label) in &p.hlines {
        let py = sy(*y);
        let _ = writeln!(out, r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#888" stroke-dasharray="5,4"/>"##, LEFT + plot_w);
        let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" font-size="11" fill="#555">{}</text>"##, LEFT + 4.0, py - 4.0, escape(label));
    }
    for (x, label) in &p.vlines {
        if p.log_x && *x <= 0.0 {
            continue;
        }
        let px = sx(*x);
        let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#d62728" stroke-dasharray="3,3"/>"##, y0 + TOP, y0 + TOP + plot_h);
        let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" font-size="11" fill="#d62728">{}</text>"##, px + 4.0, y0 + TOP + 14.0, escape(label));
    }

    for (k, s) in p.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segment = String::new();
        let flush = |seg: &mut String, out: &mut String| {
            if !seg.is_empty() {
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, seg.trim_end());
                seg.clear();
            }
        };
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) || (p.log_x && x <= 0.0) {
                flush(&mut segment, out);
                continue;
            }
            let _ = write!(segment, "{:.2},{:.2} ", sx(x), sy(y));
        }
        flush(&mut segment, out);
        if p.series.len() > 1 {
            let ly = y0 + TOP + 16.0 + 16.0 * k as f64;
            let lx = LEFT + plot_w - 150.0;
            let _ = writeln!(out, r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 20.0, ly - 4.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{ly:.2}" font-size="11">{}</text>"#, lx + 26.0, escape(&s.label));
        }
    }
}

/// Panels stacked vertically in one document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, i as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_numbers() {
        assert_eq!(linear_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(1e6), "1e6");
    }

    #[test]
    fn non_finite_points_split_the_line() {
        let p = Panel {
            series: vec![Series::new("a", vec![(1.0, 1.0), (2.0, 2.0), (3.0, f64::NAN), (4.0, 1.0), (5.0, 0.0)])],
            ..Default::default()
        };
        let svg = render(&[p]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
