//! Standalone SVG rendering of two- and three-column CSV tables.
//!
//! Every data series becomes exactly one `<polyline>`; axes, ticks and
//! reference lines are `<line>` elements, boxes are `<rect>`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::math::{quantile_sorted, variance};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `x,y` or `series,x,y`.
    Line,
    /// `fpr,tpr` or `series,fpr,tpr`, with the chance diagonal.
    Roc,
    /// `group,value`.
    Boxplot,
    /// `value` or `series,value`; Gaussian kernel density estimate.
    Density,
    /// `iteration,value` or `chain,iteration,value`.
    Trace,
}

impl PlotKind {
    fn arities(self) -> &'static [usize] {
        match self {
            PlotKind::Line | PlotKind::Roc | PlotKind::Trace => &[2, 3],
            PlotKind::Boxplot => &[2],
            PlotKind::Density => &[1, 2],
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "line" => PlotKind::Line,
            "roc" => PlotKind::Roc,
            "boxplot" => PlotKind::Boxplot,
            "density" => PlotKind::Density,
            "trace" => PlotKind::Trace,
            other => {
                return Err(Error::Config(format!(
                    "unknown plot kind `{other}` (line, roc, boxplot, density, trace)"
                )))
            }
        })
    }
}

/// Header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(|s| s.trim().to_string()).collect());
        }
        Ok(Table { headers, rows })
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let s = &self.rows[row][col];
        s.parse().map_err(|_| Error::Parse {
            line: row as u64 + 2,
            message: format!("column `{}`: invalid number `{s}`", self.headers[col]),
        })
    }

    /// Numeric series keyed by the first column (when `keyed`) in order of
    /// first appearance.
    fn series(&self, keyed: bool, n_values: usize) -> Result<Vec<(String, Vec<Vec<f64>>)>> {
        let mut out: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
        let offset = usize::from(keyed);
        for i in 0..self.rows.len() {
            let key = if keyed { self.rows[i][0].clone() } else { String::new() };
            let vals = (0..n_values).map(|c| self.number(i, c + offset)).collect::<Result<Vec<_>>>()?;
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(vals),
                None => out.push((key, vec![vals])),
            }
        }
        Ok(out)
    }
}

pub fn render_csv(text: &str, kind: PlotKind) -> Result<String> {
    render(&Table::parse(text)?, kind)
}

pub fn render(t: &Table, kind: PlotKind) -> Result<String> {
    let n = t.headers.len();
    if !kind.arities().contains(&n) {
        return Err(Error::Data(format!(
            "{kind:?} plot expects {:?} columns, got {n}",
            kind.arities()
        )));
    }
    if t.rows.is_empty() {
        return Err(Error::Data("nothing to plot".into()));
    }
    match kind {
        PlotKind::Line | PlotKind::Roc | PlotKind::Trace => {
            let keyed = n == 3;
            let series = t.series(keyed, 2)?;
            let lines: Vec<(String, Vec<(f64, f64)>)> = series
                .into_iter()
                .map(|(k, pts)| (k, pts.into_iter().map(|v| (v[0], v[1])).collect()))
                .collect();
            Ok(line_chart(&t.headers[n - 2], &t.headers[n - 1], &lines, kind == PlotKind::Roc))
        }
        PlotKind::Density => {
            let keyed = n == 2;
            let series = t.series(keyed, 1)?;
            let curves = series
                .into_iter()
                .map(|(k, v)| {
                    let vals: Vec<f64> = v.into_iter().map(|r| r[0]).collect();
                    let (xs, ys) = density_curve(&vals, 200)?;
                    Ok((k, xs.into_iter().zip(ys).collect()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(line_chart(&t.headers[n - 1], "density", &curves, false))
        }
        PlotKind::Boxplot => {
            let groups: Vec<(String, Vec<f64>)> = t
                .series(true, 1)?
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().map(|r| r[0]).collect()))
                .collect();
            Ok(box_chart(&t.headers[0], &t.headers[1], &groups))
        }
    }
}

/// Silverman's rule-of-thumb bandwidth `0.9 min(sd, IQR/1.34) n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let sd = if s.len() > 1 { variance(&s).sqrt() } else { 0.0 };
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (s.len() as f64).powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1.0
    }
}

/// Gaussian KDE on `n_points` evenly spaced points spanning the data plus
/// three bandwidths on each side.
pub fn density_curve(values: &[f64], n_points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("density needs finite values".into()));
    }
    let h = silverman_bandwidth(values);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let n_points = n_points.max(2);
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let xs: Vec<f64> = (0..n_points)
        .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
        .collect();
    let ys = xs
        .iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok((xs, ys))
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        fn range(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
            let lo = v.clone().fold(f64::INFINITY, f64::min);
            let hi = v.fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite()) {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        }
        Frame {
            x: range(xs),
            y: range(ys),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn open(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        if x_ticks {
            let v = f.x.0 + t * (f.x.1 - f.x.0);
            let px = f.px(v);
            let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 4.0);
            let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 16.0, fmt_tick(v));
        }
        let v = f.y.0 + t * (f.y.1 - f.y.0);
        let py = f.py(v);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, fmt_tick(v));
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, names: &[&str]) {
    if names.len() < 2 {
        return;
    }
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" fill="{}">{}</text>"#,
            WIDTH - RIGHT - 4.0,
            PALETTE[i % PALETTE.len()],
            escape(name)
        );
    }
}

fn line_chart(x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)], roc: bool) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let f = if roc {
        Frame {
            x: (0.0, 1.0),
            y: (0.0, 1.0),
        }
    } else {
        Frame::new(pts.clone().map(|p| p.0), pts.map(|p| p.1))
    };
    let mut out = String::new();
    open(&mut out, &f, x_label, y_label, true);
    if roc {
        let _ = writeln!(
            out,
            r##"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            f.px(0.0),
            f.py(0.0),
            f.px(1.0),
            f.py(1.0)
        );
    }
    for (i, (_, p)) in series.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            coords.join(" ")
        );
    }
    let names: Vec<&str> = series.iter().map(|(k, _)| k.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

fn box_chart(x_label: &str, y_label: &str, groups: &[(String, Vec<f64>)]) -> String {
    let f = Frame::new(
        [0.0, groups.len() as f64].into_iter(),
        groups.iter().flat_map(|(_, v)| v.iter().copied()),
    );
    let f = Frame { x: (0.0, groups.len() as f64), ..f };
    let mut out = String::new();
    open(&mut out, &f, x_label, y_label, false);
    for (i, (name, vals)) in groups.iter().enumerate() {
        let mut s = vals.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        let q = |p| quantile_sorted(&s, p);
        let (lo, q1, med, q3, hi) = (s[0], q(0.25), q(0.5), q(0.75), s[s.len() - 1]);
        let cx = f.px(i as f64 + 0.5);
        let half = 0.3 * (f.px(1.0) - f.px(0.0));
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
            f.py(lo),
            f.py(hi)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="{color}"/>"#,
            cx - half,
            f.py(q3),
            2.0 * half,
            (f.py(q1) - f.py(q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            cx - half,
            f.py(med),
            cx + half,
            f.py(med)
        );
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 16.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
