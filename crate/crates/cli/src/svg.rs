//! Minimal self-contained SVG plots: line charts with optional min/max bands
//! and a heatmap with one iso-contour.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 86.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool, px_lo: f64, px_hi: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil());
            if lo == hi {
                hi = lo * 10.0;
            }
        } else {
            if lo == hi {
                lo -= 0.5;
                hi += 0.5;
            }
            let step = nice_step((hi - lo) / 5.0);
            lo = (lo / step).floor() * step;
            hi = (hi / step).ceil() * step;
        }
        Self { lo, hi, log, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log { (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10()) } else { (v - self.lo) / (self.hi - self.lo) };
        self.px_lo + t * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            let mut out = Vec::new();
            for e in a..=b {
                let base = 10f64.powi(e);
                out.push(base);
                if b - a <= 2 && e < b {
                    out.push(2.0 * base);
                    out.push(5.0 * base);
                }
            }
            out
        } else {
            let step = nice_step((self.hi - self.lo) / 5.0);
            let n = ((self.hi - self.lo) / step).round() as usize;
            (0..=n).map(|i| self.lo + i as f64 * step).collect()
        }
    }
}

fn nice_step(raw: f64) -> f64 {
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

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn header(out: &mut String, title: &str, metadata_json: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(metadata_json));
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(title));
}

fn frame(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    for t in x.ticks() {
        let px = x.map(t);
        let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{y1}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick_label(t));
    }
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(out, r##"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, tick_label(t));
    }
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
    pub color: &'static str,
    /// Lower and upper envelope, drawn as a translucent band.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>, color: &'static str) -> Self {
        Self { label: label.into(), xs, ys, dashed: false, color, band: None }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_band(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.band = Some((lo, hi));
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub vlines: Vec<(f64, String)>,
}

fn polyline(points: &[(f64, f64)]) -> String {
    points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

impl LinePlot {
    pub fn render(&self, metadata_json: &str) -> String {
        let all_x = self.series.iter().flat_map(|s| s.xs.iter().copied()).chain(self.vlines.iter().map(|v| v.0));
        let all_y = self.series.iter().flat_map(|s| {
            let band = s.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi.iter()).copied());
            s.ys.iter().copied().chain(band)
        });
        let x = Axis::fit(all_x, self.log_x, LEFT, WIDTH - RIGHT);
        let y = Axis::fit(all_y.collect::<Vec<_>>().into_iter(), self.log_y, HEIGHT - BOTTOM, TOP);
        let ok = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);

        let mut out = String::new();
        header(&mut out, &self.title, metadata_json);
        frame(&mut out, &x, &y, &self.x_label, &self.y_label);
        for s in &self.series {
            if let Some((lo, hi)) = &s.band {
                let mut pts: Vec<(f64, f64)> = Vec::new();
                for (i, &xv) in s.xs.iter().enumerate() {
                    if ok(xv, self.log_x) && ok(hi[i], self.log_y) {
                        pts.push((x.map(xv), y.map(hi[i])));
                    }
                }
                for (i, &xv) in s.xs.iter().enumerate().rev() {
                    if ok(xv, self.log_x) && ok(lo[i], self.log_y) {
                        pts.push((x.map(xv), y.map(lo[i])));
                    }
                }
                let _ = writeln!(out, r#"<polygon points="{}" fill="{}" fill-opacity="0.18" stroke="none"/>"#, polyline(&pts), s.color);
            }
            let pts: Vec<(f64, f64)> = s
                .xs
                .iter()
                .zip(&s.ys)
                .filter(|(a, b)| ok(**a, self.log_x) && ok(**b, self.log_y))
                .map(|(a, b)| (x.map(*a), y.map(*b)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#, polyline(&pts), s.color);
            if !s.dashed {
                for (px, py) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{}"/>"#, s.color);
                }
            }
        }
        for (v, label) in &self.vlines {
            if ok(*v, self.log_x) {
                let px = x.map(*v);
                let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{TOP}" stroke="#555" stroke-dasharray="2 3"/>"##, HEIGHT - BOTTOM);
                let _ = writeln!(out, r##"<text x="{:.2}" y="{}" fill="#555">{}</text>"##, px + 4.0, TOP + 14.0, escape(label));
            }
        }
        let lx = WIDTH - RIGHT + 14.0;
        for (i, s) in self.series.iter().enumerate() {
            let ly = TOP + 10.0 + 20.0 * i as f64;
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.8"{dash}/>"#, lx + 24.0, s.color);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Values on a grid, `values[i][j]` at `(xs[j], ys[i])`.
#[derive(Debug, Clone, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub contour: Option<f64>,
    pub colorbar_label: String,
}

/// Five-stop approximation of a perceptually ordered dark-to-light map.
fn colormap(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Cell boundaries halfway between samples (geometric midpoints on a log axis).
fn edges(v: &[f64], log: bool) -> Vec<f64> {
    let mid = |a: f64, b: f64| if log { (a * b).sqrt() } else { (a + b) / 2.0 };
    let n = v.len();
    if n == 1 {
        return if log { vec![v[0] / 1.5, v[0] * 1.5] } else { vec![v[0] - 0.5, v[0] + 0.5] };
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(if log { v[0] * v[0] / mid(v[0], v[1]) } else { 2.0 * v[0] - mid(v[0], v[1]) });
    for i in 0..n - 1 {
        out.push(mid(v[i], v[i + 1]));
    }
    out.push(if log { v[n - 1] * v[n - 1] / mid(v[n - 2], v[n - 1]) } else { 2.0 * v[n - 1] - mid(v[n - 2], v[n - 1]) });
    out
}

/// Marching squares over the sample lattice; returns segments in data
/// coordinates.
pub fn contour_segments(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<[(f64, f64); 2]> {
    let mut segs = Vec::new();
    if xs.len() < 2 || ys.len() < 2 {
        return segs;
    }
    let lerp = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        let t = (level - a.2) / (b.2 - a.2);
        (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
    };
    for i in 0..ys.len() - 1 {
        for j in 0..xs.len() - 1 {
            let c = [
                (xs[j], ys[i], values[i][j]),
                (xs[j + 1], ys[i], values[i][j + 1]),
                (xs[j + 1], ys[i + 1], values[i + 1][j + 1]),
                (xs[j], ys[i + 1], values[i + 1][j]),
            ];
            let mut hits = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a.2 < level) != (b.2 < level) {
                    hits.push(lerp(a, b));
                }
            }
            if hits.len() == 2 {
                segs.push([hits[0], hits[1]]);
            } else if hits.len() == 4 {
                segs.push([hits[0], hits[1]]);
                segs.push([hits[2], hits[3]]);
            }
        }
    }
    segs
}

impl Heatmap {
    pub fn render(&self, metadata_json: &str) -> String {
        let xe = edges(&self.xs, self.log_x);
        let ye = edges(&self.ys, false);
        let x = Axis { lo: xe[0], hi: xe[xe.len() - 1], log: self.log_x, px_lo: LEFT, px_hi: WIDTH - RIGHT };
        let y = Axis { lo: ye[0], hi: ye[ye.len() - 1], log: false, px_lo: HEIGHT - BOTTOM, px_hi: TOP };
        let finite = self.values.iter().flatten().copied().filter(|v| v.is_finite());
        let (vmin, vmax) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let span = if vmax > vmin { vmax - vmin } else { 1.0 };

        let mut out = String::new();
        header(&mut out, &self.title, metadata_json);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let (px0, px1) = (x.map(xe[j]), x.map(xe[j + 1]));
                let (py0, py1) = (y.map(ye[i + 1]), y.map(ye[i]));
                let _ = writeln!(
                    out,
                    r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="none" shape-rendering="crispEdges"/>"#,
                    (px1 - px0).max(0.0) + 0.4,
                    (py1 - py0).max(0.0) + 0.4,
                    colormap((v - vmin) / span)
                );
            }
        }
        frame_ticks_only(&mut out, &x, &y, &self.x_label, &self.y_label);
        if let Some(level) = self.contour {
            for [a, b] in contour_segments(&self.xs, &self.ys, &self.values, level) {
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="white" stroke-width="1.6"/>"#,
                    x.map(a.0),
                    y.map(a.1),
                    x.map(b.0),
                    y.map(b.1)
                );
            }
        }
        let bx = WIDTH - RIGHT + 24.0;
        let steps = 40;
        let h = (HEIGHT - BOTTOM - TOP) / steps as f64;
        for k in 0..steps {
            let t = 1.0 - (k as f64 + 0.5) / steps as f64;
            let _ = writeln!(out, r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#, TOP + k as f64 * h, h + 0.4, colormap(t));
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 22.0, TOP + 10.0, tick_label(vmax));
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 22.0, HEIGHT - BOTTOM, tick_label(vmin));
        let _ = writeln!(
            out,
            r#"<text x="{0}" y="{1}" text-anchor="middle" transform="rotate(90 {0} {1})">{2}</text>"#,
            bx + 70.0,
            (HEIGHT - BOTTOM + TOP) / 2.0,
            escape(&self.colorbar_label)
        );
        if let Some(level) = self.contour {
            let _ = writeln!(out, r#"<text x="{bx}" y="{}">white: {}</text>"#, HEIGHT - BOTTOM + 24.0, tick_label(level));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn frame_ticks_only(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    for t in x.ticks().into_iter().filter(|t| *t >= x.lo && *t <= x.hi) {
        let px = x.map(t);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 4.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick_label(t));
    }
    let step = nice_step((y.hi - y.lo) / 5.0);
    let mut t = (y.lo / step).ceil() * step;
    while t <= y.hi {
        let py = y.map(t);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, tick_label(t));
        t += step;
    }
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}
