//! Deterministic SVG rendering plus an equivalent gnuplot script, so the
//! core stays free of plotting dependencies. Fixed viewport, fixed fonts,
//! fixed float formatting: the same CSV always yields identical bytes.

use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::path::Path;

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 60.0;

pub enum Style {
    Histogram,
    Trace,
}

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(i, field)| {
                field.parse::<f64>().with_context(|| {
                    format!("column `{}`: non-numeric value `{field}`", headers[i])
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("no data rows in {}", path.display());
    }
    Ok(Table { headers, rows })
}

fn column<'t>(table: &'t Table, name: &str) -> Result<Vec<f64>> {
    let idx = table
        .headers
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("schema mismatch: missing column `{name}`"))?;
    Ok(table.rows.iter().map(|r| r[idx]).collect())
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.xmin) / (self.xmax - self.xmin) * (W - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.ymin) / (self.ymax - self.ymin) * (H - 2.0 * MARGIN)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"16\" \
         text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    )
}

fn svg_axes(out: &mut String, frame: &Frame) {
    let _ = write!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(W - 2.0 * MARGIN),
        fmt(H - 2.0 * MARGIN)
    );
    for i in 0..=4 {
        let xv = frame.xmin + (frame.xmax - frame.xmin) * i as f64 / 4.0;
        let yv = frame.ymin + (frame.ymax - frame.ymin) * i as f64 / 4.0;
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            fmt(frame.x(xv)),
            fmt(H - MARGIN + 18.0),
            fmt(xv)
        );
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN - 6.0),
            fmt(frame.y(yv) + 4.0),
            fmt(yv)
        );
    }
}

const COLORS: [&str; 6] = ["steelblue", "crimson", "seagreen", "darkorange", "purple", "gray"];

pub fn render_svg(table: &Table, style: &Style, title: &str) -> Result<String> {
    let mut out = svg_header(title);
    match style {
        Style::Histogram => {
            let left = column(table, "bin_left")?;
            let right = column(table, "bin_right")?;
            let density = column(table, "density")?;
            let xmax = right.iter().cloned().fold(0.0, f64::max);
            let ymax = density.iter().cloned().fold(1.0, f64::max) * 1.1;
            let frame = Frame {
                xmin: 0.0,
                xmax,
                ymin: 0.0,
                ymax,
            };
            for i in 0..left.len() {
                let x = frame.x(left[i]);
                let wdt = frame.x(right[i]) - x;
                let y = frame.y(density[i]);
                let _ = write!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
                     fill=\"steelblue\" fill-opacity=\"0.6\" stroke=\"black\" \
                     stroke-width=\"0.5\"/>\n",
                    fmt(x),
                    fmt(y),
                    fmt(wdt),
                    fmt(H - MARGIN - y)
                );
            }
            // overlay: the exponential density e^{-s}
            let pts: Vec<String> = (0..=200)
                .map(|i| {
                    let s = xmax * i as f64 / 200.0;
                    format!("{},{}", fmt(frame.x(s)), fmt(frame.y((-s).exp())))
                })
                .collect();
            let _ = write!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n",
                pts.join(" ")
            );
            svg_axes(&mut out, &frame);
        }
        Style::Trace => {
            if table.headers.len() < 2 {
                bail!("schema mismatch: trace plots need an x column plus data columns");
            }
            let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
            let (xmin, xmax) = (
                xs.iter().cloned().fold(f64::INFINITY, f64::min),
                xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            let mut ymin = f64::INFINITY;
            let mut ymax = f64::NEG_INFINITY;
            for row in &table.rows {
                for &v in &row[1..] {
                    ymin = ymin.min(v);
                    ymax = ymax.max(v);
                }
            }
            if !(xmin < xmax) {
                bail!("x column is constant; nothing to plot");
            }
            let pad = 0.05 * (ymax - ymin).max(1e-12);
            let frame = Frame {
                xmin,
                xmax,
                ymin: ymin - pad,
                ymax: ymax + pad,
            };
            for c in 1..table.headers.len() {
                let pts: Vec<String> = table
                    .rows
                    .iter()
                    .map(|r| format!("{},{}", fmt(frame.x(r[0])), fmt(frame.y(r[c]))))
                    .collect();
                let color = COLORS[(c - 1) % COLORS.len()];
                let _ = write!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                     stroke-width=\"1.5\"/>\n",
                    pts.join(" ")
                );
                let _ = write!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
                     fill=\"{color}\">{}</text>\n",
                    fmt(W - MARGIN + 4.0),
                    fmt(MARGIN + 14.0 * c as f64),
                    table.headers[c]
                );
            }
            svg_axes(&mut out, &frame);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_gnuplot(table: &Table, style: &Style, csv_path: &Path, title: &str) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\n"
    );
    match style {
        Style::Histogram => {
            let _ = write!(
                out,
                "set style fill transparent solid 0.6 border -1\n\
                 plot '{}' using (($1+$2)/2):4:($2-$1) with boxes title 'density', \\\n     \
                 exp(-x) with lines lw 2 title 'exp(-s)'\n",
                csv_path.display()
            );
        }
        Style::Trace => {
            let series: Vec<String> = (2..=table.headers.len())
                .map(|c| format!("'{}' using 1:{c} with lines", csv_path.display()))
                .collect();
            let _ = write!(out, "plot {}\n", series.join(", \\\n     "));
        }
    }
    out
}
