//! Minimal static SVG line charts.
//!
//! Coordinates are printed with two decimals and no timestamps or random
//! ids are emitted, so identical inputs give identical files.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Line { label: String, x: Vec<f64>, y: Vec<f64>, color: &'static str },
    /// Right-continuous step function through `(x, y)` (an ECDF).
    Step { label: String, x: Vec<f64>, y: Vec<f64>, color: &'static str },
    Band { label: String, x: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, color: &'static str },
    /// Histogram with `edges.len() == heights.len() + 1`.
    Bars { label: String, edges: Vec<f64>, heights: Vec<f64>, color: &'static str },
}

impl Series {
    fn label(&self) -> &str {
        match self {
            Series::Line { label, .. }
            | Series::Step { label, .. }
            | Series::Band { label, .. }
            | Series::Bars { label, .. } => label,
        }
    }

    fn color(&self) -> &'static str {
        match self {
            Series::Line { color, .. }
            | Series::Step { color, .. }
            | Series::Band { color, .. }
            | Series::Bars { color, .. } => color,
        }
    }

    fn extent(&self, log_y: bool) -> (Vec<f64>, Vec<f64>) {
        let keep = |v: &f64| v.is_finite() && (!log_y || *v > 0.0);
        match self {
            Series::Line { x, y, .. } | Series::Step { x, y, .. } => {
                (x.clone(), y.iter().copied().filter(keep).collect())
            }
            Series::Band { x, lo, hi, .. } => (
                x.clone(),
                lo.iter().chain(hi).copied().filter(keep).collect(),
            ),
            Series::Bars { edges, heights, .. } => {
                let mut ys: Vec<f64> = heights.iter().copied().filter(keep).collect();
                if !log_y {
                    ys.push(0.0);
                }
                (edges.clone(), ys)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick spacing of 1, 2 or 5 times a power of ten.
fn tick_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo, 5);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn to_svg(&self) -> String {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            let (x, y) = s.extent(self.log_y);
            xs.extend(x);
            ys.extend(y);
        }
        let (x0, x1) = bounds(xs.into_iter()).unwrap_or((0.0, 1.0));
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let (y0, y1) = bounds(ys.into_iter().map(ty)).unwrap_or((0.0, 1.0));
        let (y0, y1) = if self.log_y {
            (y0, y1)
        } else {
            let pad = 0.04 * (y1 - y0);
            (y0 - pad, y1 + pad)
        };
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |v: f64| LEFT + (v - x0) / (x1 - x0) * pw;
        let sy = |v: f64| TOP + ph - (ty(v) - y0) / (y1 - y0) * ph;
        let ok = |v: f64| v.is_finite() && (!self.log_y || v > 0.0);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let (y, label) = if self.log_y {
                (TOP + ph - (t - y0) / (y1 - y0) * ph, fmt_tick(10f64.powf(t)))
            } else {
                (sy(t), fmt_tick(t))
            };
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for series in &self.series {
            let color = series.color();
            match series {
                Series::Band { x, lo, hi, .. } => {
                    let mut pts = Vec::new();
                    for k in 0..x.len() {
                        if ok(hi[k]) {
                            pts.push(format!("{:.2},{:.2}", sx(x[k]), sy(hi[k])));
                        }
                    }
                    for k in (0..x.len()).rev() {
                        if ok(lo[k]) {
                            pts.push(format!("{:.2},{:.2}", sx(x[k]), sy(lo[k])));
                        }
                    }
                    let _ = writeln!(
                        s,
                        r#"<polygon points="{}" fill="{color}" fill-opacity="0.25" stroke="none"/>"#,
                        pts.join(" ")
                    );
                }
                Series::Bars { edges, heights, .. } => {
                    let base = if self.log_y { TOP + ph } else { sy(0.0) };
                    for (k, &h) in heights.iter().enumerate() {
                        if !ok(h) {
                            continue;
                        }
                        let (a, b) = (sx(edges[k]), sx(edges[k + 1]));
                        let top = sy(h);
                        let _ = writeln!(
                            s,
                            r#"<rect x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}" stroke-width="0.5"/>"#,
                            (b - a).max(0.0),
                            (base - top).max(0.0)
                        );
                    }
                }
                Series::Line { x, y, .. } => {
                    let pts: Vec<String> = x
                        .iter()
                        .zip(y)
                        .filter(|(_, v)| ok(**v))
                        .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                        pts.join(" ")
                    );
                }
                Series::Step { x, y, .. } => {
                    let mut pts = Vec::new();
                    for k in 0..x.len() {
                        if !ok(y[k]) {
                            continue;
                        }
                        if k > 0 && ok(y[k - 1]) {
                            pts.push(format!("{:.2},{:.2}", sx(x[k]), sy(y[k - 1])));
                        }
                        pts.push(format!("{:.2},{:.2}", sx(x[k]), sy(y[k])));
                    }
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
                        pts.join(" ")
                    );
                }
            }
        }

        for (k, series) in self.series.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * k as f64;
            let x = WIDTH - RIGHT - 170.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="14" height="8" fill="{}"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
                y - 8.0,
                series.color(),
                x + 20.0,
                escape(series.label())
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel() -> Panel {
        Panel::new("F & f <test>", "λ", "F")
            .with(Series::Band {
                label: "band".into(),
                x: vec![0.0, 1.0, 2.0],
                lo: vec![0.0, 0.3, 0.8],
                hi: vec![0.2, 0.7, 1.0],
                color: "#1f77b4",
            })
            .with(Series::Line {
                label: "model".into(),
                x: vec![0.0, 1.0, 2.0],
                y: vec![0.1, 0.5, 0.9],
                color: "#d62728",
            })
            .with(Series::Step {
                label: "ecdf".into(),
                x: vec![0.5, 1.5],
                y: vec![0.5, 1.0],
                color: "#333333",
            })
            .with(Series::Bars {
                label: "hist".into(),
                edges: vec![0.0, 1.0, 2.0],
                heights: vec![0.4, 0.6],
                color: "#2ca02c",
            })
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let a = panel().to_svg();
        assert_eq!(a, panel().to_svg());
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("F &amp; f &lt;test&gt;"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert_eq!(a.matches("<polygon").count(), 1);
    }

    #[test]
    fn log_axis_skips_nonpositive() {
        let mut p = Panel::new("loss", "iteration", "loss").with(Series::Line {
            label: "train".into(),
            x: vec![1.0, 2.0, 3.0],
            y: vec![1.0, 0.0, 0.01],
            color: "#000",
        });
        p.log_y = true;
        let svg = p.to_svg();
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 2);
    }

    #[test]
    fn nice_ticks() {
        assert_eq!(tick_step(1.0, 5), 0.2);
        assert_eq!(tick_step(23.0, 5), 5.0);
        assert_eq!(ticks(0.0, 1.0).len(), 6);
        assert_eq!(fmt_tick(0.2), "0.2");
        assert_eq!(fmt_tick(25.0), "25");
    }
}
