//! Output rows, their CSV/JSON encodings and a minimal SVG line plot.

use std::fmt::Write as _;

use serde::Serialize;

pub const CSV_HEADER: &str = "experiment,theta,n,phi,tau,sigma,gamma_ratio,mu,delta_phi,method,flag";

/// One output record. Columns that do not apply to a record are `None`
/// and serialize as empty CSV cells (JSON `null`).
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: &'static str,
    pub theta: f64,
    pub n: Option<usize>,
    pub phi: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma_ratio: Option<f64>,
    pub mu: u32,
    pub delta_phi: f64,
    pub method: &'static str,
    pub flag: &'static str,
}

/// 17 significant digits, enough to round-trip every f64.
pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            number(r.theta),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            opt(r.phi),
            opt(r.tau),
            opt(r.sigma),
            opt(r.gamma_ratio),
            r.mu,
            number(r.delta_phi),
            r.method,
            r.flag,
        );
    }
    out
}

pub fn to_json(rows: &[Row]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

/// One polyline of a plot.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: &'static str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#2ca02c", "#17becf", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
];

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h) = (720.0, 480.0);
        let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| {
                x.is_finite() && y.is_finite() && (!self.log_x || *x > 0.0) && (!self.log_y || *y > 0.0)
            })
            .map(|&(x, y)| (tx(x), ty(y)))
            .collect();
        let bounds = |v: Vec<f64>| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = bounds(pts.iter().map(|p| p.0).collect());
        let (y0, y1) = bounds(pts.iter().map(|p| p.1).collect());
        let pw = w - left - right;
        let ph = h - top - bottom;
        let sx = |x: f64| left + (tx(x) - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + ph - (ty(y) - y0) / (y1 - y0) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            left + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let axis = |v: f64, log: bool| if log { format!("{:.3e}", 10f64.powf(v)) } else { format!("{v:.4}") };
        for (i, frac) in [0.0, 0.5, 1.0].iter().enumerate() {
            let xv = x0 + frac * (x1 - x0);
            let yv = y0 + frac * (y1 - y0);
            let px = left + frac * pw;
            let py = top + ph - frac * ph;
            let anchor = ["start", "middle", "end"][i];
            let _ = writeln!(
                svg,
                r#"<text x="{px}" y="{}" text-anchor="{anchor}">{}</text>"#,
                top + ph + 16.0,
                axis(xv, self.log_x)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{py}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                left - 6.0,
                axis(yv, self.log_y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            h - 16.0,
            self.x_label
        );
        let _ = writeln!(
            svg,
            r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">delta phi</text>"#,
            top + ph / 2.0,
            top + ph / 2.0
        );
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| {
                    x.is_finite()
                        && y.is_finite()
                        && (!self.log_x || *x > 0.0)
                        && (!self.log_y || *y > 0.0)
                })
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if !path.is_empty() {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
            }
            let ly = top + 14.0 + 18.0 * k as f64;
            let lx = w - right + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"#,
                lx + 26.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
