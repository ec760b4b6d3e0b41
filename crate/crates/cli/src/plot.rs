//! Minimal SVG charts: one-series line plots and grouped bar charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const TICKS: usize = 5;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    /// `(name, values)`; every series has one value per category.
    pub series: Vec<(String, Vec<f64>)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / TICKS as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Range padded out to tick multiples.
fn axis_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    format!("{:.*}", digits, v)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(svg: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let cy = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
        escape(y_label)
    );
}

fn axes(svg: &mut String, f: &Frame) {
    let (xb, yb) = (HEIGHT - BOTTOM, LEFT);
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{LEFT}" y1="{xb}" x2="{:.2}" y2="{xb}" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{yb}" y1="{TOP}" x2="{yb}" y2="{xb}" stroke="black"/>"#
    );
    let step = nice_step(f.y1 - f.y0);
    let mut k = 0;
    loop {
        let v = f.y0 + step * k as f64;
        if v > f.y1 + step * 1e-9 {
            break;
        }
        let y = f.py(v);
        let _ = writeln!(
            svg,
            r#"<text class="y-tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(v, step)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 4.0
        );
        k += 1;
    }
}

impl LineChart {
    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (xmin, xmax) = bounds(pts.iter().map(|p| p.0));
        let (ymin, ymax) = bounds(pts.iter().map(|p| p.1));
        let (x0, x1, xstep) = axis_range(xmin, xmax);
        let (y0, y1, _) = axis_range(ymin, ymax);
        let f = Frame { x0, x1, y0, y1 };

        let mut svg = String::new();
        open(&mut svg, &self.title, &self.x_label, &self.y_label);
        axes(&mut svg, &f);
        let mut k = 0;
        loop {
            let v = x0 + xstep * k as f64;
            if v > x1 + xstep * 1e-9 {
                break;
            }
            let _ = writeln!(
                svg,
                r#"<text class="x-tick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                f.px(v),
                HEIGHT - BOTTOM + 18.0,
                fmt_tick(v, xstep)
            );
            k += 1;
        }
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[0],
            path.join(" ")
        );
        svg.push_str("</svg>\n");
        svg
    }
}

impl BarChart {
    pub fn to_svg(&self) -> String {
        let (mut ymin, ymax) = bounds(self.series.iter().flat_map(|s| s.1.iter().copied()));
        ymin = ymin.min(0.0);
        let (y0, y1, _) = axis_range(ymin, ymax);
        let f = Frame {
            x0: 0.0,
            x1: self.categories.len().max(1) as f64,
            y0,
            y1,
        };

        let mut svg = String::new();
        open(&mut svg, &self.title, &self.x_label, &self.y_label);
        axes(&mut svg, &f);
        let groups = self.categories.len().max(1);
        let group_w = (WIDTH - LEFT - RIGHT) / groups as f64;
        let bar_w = group_w * 0.8 / self.series.len().max(1) as f64;
        let label_every = groups.div_ceil(20);
        for (g, cat) in self.categories.iter().enumerate() {
            if g % label_every == 0 {
                let _ = writeln!(
                    svg,
                    r#"<text class="x-tick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    f.px(g as f64 + 0.5),
                    HEIGHT - BOTTOM + 18.0,
                    escape(cat)
                );
            }
        }
        let base = f.py(0.0f64.clamp(y0, y1));
        for (s, (name, values)) in self.series.iter().enumerate() {
            let color = PALETTE[s % PALETTE.len()];
            for (g, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    continue;
                }
                let x = f.px(g as f64) + group_w * 0.1 + bar_w * s as f64;
                let y = f.py(v);
                let _ = writeln!(
                    svg,
                    r#"<rect class="bar" data-series="{}" x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{:.2}" fill="{color}"/>"#,
                    escape(name),
                    y.min(base),
                    (y - base).abs()
                );
            }
            let ly = TOP + 14.0 * s as f64;
            let _ = writeln!(
                svg,
                r#"<rect class="legend" x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#,
                WIDTH - RIGHT - 110.0,
                ly - 9.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
                WIDTH - RIGHT - 95.0,
                escape(name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .unwrap_or((0.0, 1.0))
}
