//! Minimal SVG line charts.

use std::fmt::Write as _;

use crate::trace::TraceRow;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Shaded `(x, low, high)` band drawn under the line.
    pub band: Vec<(f64, f64, f64)>,
}

/// Horizontal reference line.
pub struct RefLine {
    pub y: f64,
    pub label: String,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = span(xs);
        let (y0, y1) = span(ys);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

/// Min and max, padded so a single value still spans a visible range.
fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { (hi - lo) * 0.05 } else { lo.abs().max(1.0) * 0.1 };
    (lo - pad, hi + pad)
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (PAD, W - PAD, PAD, H - PAD);
    let _ = write!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = write!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, f.px(fx), b + 16.0, tick(fx));
        let _ = write!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, f.py(fy) + 4.0, tick(fy));
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = write!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{:.0}k", v / 1000.0)
    } else if v.abs() >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], refs: &[RefLine]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1).chain(s.band.iter().flat_map(|b| [b.1, b.2])))
        .chain(refs.iter().map(|r| r.y));
    let f = Frame::fit(xs, ys.collect::<Vec<_>>().into_iter());
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    for r in refs {
        let y = f.py(r.y);
        let _ = write!(
            out,
            r##"<line x1="{PAD}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#555" stroke-dasharray="6 4"/><text x="{}" y="{:.1}" text-anchor="end" fill="#555">{}</text>"##,
            W - PAD,
            W - PAD - 4.0,
            y - 4.0,
            escape(&r.label)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        if !s.band.is_empty() {
            let mut d = String::new();
            for (k, b) in s.band.iter().enumerate() {
                let _ = write!(d, "{}{:.1} {:.1} ", if k == 0 { "M" } else { "L" }, f.px(b.0), f.py(b.2));
            }
            for b in s.band.iter().rev() {
                let _ = write!(d, "L{:.1} {:.1} ", f.px(b.0), f.py(b.1));
            }
            let _ = write!(out, r#"<path d="{d}Z" fill="{c}" fill-opacity="0.2" stroke="none"/>"#);
        }
        match s.points.as_slice() {
            [] => {}
            [p] => {
                let _ = write!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#, f.px(p.0), f.py(p.1));
            }
            pts => {
                let d: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", f.px(p.0), f.py(p.1))).collect();
                let _ = write!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, d.join(" "));
            }
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" fill="{c}">{}</text>"#,
            PAD + 8.0,
            PAD + 14.0 * (i as f64 + 1.0),
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Blue (no force) through red (twice the target).
fn force_color(f: f64, mu: f64) -> String {
    let t = (f / (2.0 * mu)).clamp(0.0, 1.0);
    let r = (255.0 * t) as u8;
    let b = (255.0 * (1.0 - t)) as u8;
    format!("#{r:02x}30{b:02x}")
}

/// Top-down path colored by normal force, with wipe events marked.
pub fn path_plot(rows: &[TraceRow], mu: f64) -> String {
    let f = Frame::fit(rows.iter().map(|r| r.x), rows.iter().map(|r| r.y));
    let mut out = String::new();
    header(&mut out, "Tool path (top-down, colored by normal force)");
    axes(&mut out, &f, "x (m)", "y (m)");
    for w in rows.windows(2) {
        let _ = write!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="3"/>"#,
            f.px(w[0].x),
            f.py(w[0].y),
            f.px(w[1].x),
            f.py(w[1].y),
            force_color(w[1].f_z, mu)
        );
    }
    for r in rows {
        if r.event.contains("wipe:") {
            let _ = write!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="6" fill="none" stroke="black" stroke-width="2"/>"#,
                f.px(r.x),
                f.py(r.y)
            );
        }
    }
    if let Some(s) = rows.first() {
        let _ = write!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{}"/>"#,
            f.px(s.x),
            f.py(s.y),
            force_color(s.f_z, mu)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn force_plot(rows: &[TraceRow], mu: f64) -> String {
    let s = Series {
        name: "normal force".into(),
        points: rows.iter().map(|r| (f64::from(r.step), r.f_z)).collect(),
        band: Vec::new(),
    };
    line_chart(
        "Normal force per step",
        "step",
        "f_z (N)",
        &[s],
        &[RefLine {
            y: mu,
            label: format!("target {mu} N"),
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u32, f: f64) -> TraceRow {
        TraceRow {
            step,
            x: 0.01 * f64::from(step),
            y: 0.0,
            z: 0.0,
            f_z: f,
            reward: 0.0,
            event: String::new(),
        }
    }

    #[test]
    fn single_point_plots_do_not_degenerate() {
        let rows = vec![row(1, 250.0)];
        let p = path_plot(&rows, 60.0);
        assert!(p.contains("<circle") && !p.contains("NaN"));
        let f = force_plot(&rows, 60.0);
        assert!(f.contains("target 60 N") && !f.contains("NaN"));
    }

    #[test]
    fn force_chart_includes_target_line() {
        let rows: Vec<TraceRow> = (1..20).map(|i| row(i, 50.0 + f64::from(i))).collect();
        let f = force_plot(&rows, 60.0);
        assert!(f.contains("stroke-dasharray"));
        assert!(f.contains("<polyline"));
    }
}
