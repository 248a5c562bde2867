//! Tabular results and their CSV, JSON and SVG renderings.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config_sha256: String,
    /// Named scalar or array metrics, in insertion order.
    pub metrics: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub x_label: String,
    pub plot: Vec<Series>,
}

impl Report {
    pub fn new(command: &str, config_sha256: &str, columns: &[&str]) -> Self {
        Self {
            command: command.into(),
            config_sha256: config_sha256.into(),
            metrics: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            x_label: columns.first().map_or(String::new(), |c| c.to_string()),
            plot: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: &str, value: impl Into<Value>) {
        self.metrics.push((name.into(), value.into()));
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Plots every column after the first against the first.
    pub fn plot_all_columns(&mut self) {
        let x = self.column(&self.columns[0].clone()).unwrap_or_default();
        self.plot = self.columns[1..]
            .iter()
            .map(|c| Series {
                name: c.clone(),
                x: x.clone(),
                y: self.column(c).unwrap_or_default(),
            })
            .collect();
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# fanodiag {} config_sha256={}", self.command, self.config_sha256);
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| number(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command.clone()));
        m.insert("config_sha256".into(), Value::from(self.config_sha256.clone()));
        for (k, v) in &self.metrics {
            m.insert(k.clone(), v.clone());
        }
        for c in &self.columns {
            let col = self.column(c).unwrap_or_default();
            m.insert(c.clone(), Value::from(col));
        }
        let mut out = serde_json::to_string_pretty(&Value::Object(m)).expect("serializable");
        out.push('\n');
        out
    }

    /// Self-contained SVG line plot of `plot`.
    pub fn to_svg(&self) -> String {
        const W: f64 = 720.0;
        const H: f64 = 440.0;
        const L: f64 = 70.0;
        const R: f64 = 170.0;
        const T: f64 = 30.0;
        const B: f64 = 50.0;
        let finite = |v: &&f64| v.is_finite();
        let xs = self.plot.iter().flat_map(|s| s.x.iter()).filter(finite);
        let ys = self.plot.iter().flat_map(|s| s.y.iter()).filter(finite);
        let (x0, x1) = bounds(xs.copied());
        let (y0, y1) = bounds(ys.copied());
        let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
        let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{L}" y="18">fanodiag {}</text>"#, xml_escape(&self.command));
        let _ = writeln!(
            s,
            r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - L - R,
            H - T - B
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, px(fx), H - B + 16.0, tick(fx));
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, L - 6.0, py(fy) + 4.0, tick(fy));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            L + 0.5 * (W - L - R),
            H - 12.0,
            xml_escape(&self.x_label)
        );
        for (i, series) in self.plot.iter().enumerate() {
            let color = colors[i % colors.len()];
            let mut d = String::new();
            let mut pen_down = false;
            for (x, y) in series.x.iter().zip(&series.y) {
                if x.is_finite() && y.is_finite() {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(*x), py(*y));
                    pen_down = true;
                } else {
                    pen_down = false;
                }
            }
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
            let ly = T + 16.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                W - R + 10.0,
                W - R + 30.0,
                W - R + 36.0,
                ly + 4.0,
                xml_escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Shortest round-trip text, switching to exponent form for very small or large magnitudes.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
