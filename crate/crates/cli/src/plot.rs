//! Self-contained SVG line charts from a run's `timeseries.csv`.

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{bail, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Latency,
    Replicas,
    Cpu,
    Utilization,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "latency" => Metric::Latency,
            "replicas" => Metric::Replicas,
            "cpu" => Metric::Cpu,
            "utilization" => Metric::Utilization,
            _ => {
                return Err(format!(
                    "unknown metric {s:?} (latency|replicas|cpu|utilization)"
                ))
            }
        })
    }
}

impl Metric {
    fn suffix(self) -> &'static str {
        match self {
            Metric::Latency => ".p90_observed_ms",
            Metric::Replicas => ".ready",
            Metric::Cpu => ".cpu_mcores",
            Metric::Utilization => ".utilization",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Latency => "P90 latency (ms)",
            Metric::Replicas => "ready replicas",
            Metric::Cpu => "CPU (mcores)",
            Metric::Utilization => "utilization",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// (seconds, value); `None` where the run had no sample.
    pub points: Vec<(f64, Option<f64>)>,
}

impl Series {
    pub fn mean(&self) -> Option<f64> {
        let v: Vec<f64> = self.points.iter().filter_map(|p| p.1).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Pull the metric's series out of a timeseries CSV. Latency adds the
/// end-to-end observed P90 as its own series.
pub fn extract(csv: &str, metric: Metric) -> anyhow::Result<Vec<Series>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines
        .next()
        .context("timeseries is empty")?
        .split(',')
        .collect();
    let step = header
        .iter()
        .position(|c| *c == "step_ms")
        .context("missing column step_ms")?;
    let mut cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.strip_suffix(metric.suffix()).map(|s| (i, s.to_string())))
        .collect();
    if metric == Metric::Latency {
        if let Some(i) = header.iter().position(|c| *c == "p90_observed_ms") {
            cols.push((i, "end-to-end".into()));
        }
    }
    if cols.is_empty() {
        bail!(
            "no {} columns in timeseries",
            metric.suffix().trim_start_matches('.')
        );
    }
    let mut series: Vec<Series> = cols
        .iter()
        .map(|(_, n)| Series {
            name: n.clone(),
            points: Vec::new(),
        })
        .collect();
    for (ln, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            bail!(
                "timeseries line {}: expected {} fields, got {}",
                ln + 2,
                header.len(),
                f.len()
            );
        }
        let t: f64 = f[step]
            .parse()
            .with_context(|| format!("timeseries line {}: step_ms", ln + 2))?;
        for (s, (i, _)) in series.iter_mut().zip(&cols) {
            let v = if f[*i].is_empty() {
                None
            } else {
                Some(
                    f[*i]
                        .parse()
                        .with_context(|| format!("timeseries line {}: {}", ln + 2, header[*i]))?,
                )
            };
            s.points.push((t / 1000.0, v));
        }
    }
    Ok(series)
}

const W: f64 = 800.0;
const H: f64 = 400.0;
const ML: f64 = 64.0;
const MR: f64 = 150.0;
const MT: f64 = 20.0;
const MB: f64 = 44.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if v <= m * mag {
            return m * mag;
        }
    }
    10.0 * mag
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render series as an SVG line chart. Byte-stable for a fixed input.
pub fn render(series: &[Series], metric: Metric, slo_ms: Option<f64>) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (x0, x1) = if x0.is_finite() && x1 > x0 {
        (x0, x1)
    } else {
        (0.0, 1.0)
    };
    let mut ymax = series
        .iter()
        .flat_map(|s| s.points.iter().filter_map(|p| p.1))
        .fold(0.0, f64::max);
    let slo = slo_ms.filter(|_| metric == Metric::Latency);
    if let Some(s) = slo {
        ymax = ymax.max(s);
    }
    let ymax = nice_max(ymax * 1.05);
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MT + ph - y / ymax * ph;

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(o, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(
        o,
        r##"<path d="M{ML},{MT}V{:.2}H{:.2}" fill="none" stroke="#000000"/>"##,
        MT + ph,
        ML + pw
    );
    for i in 0..=4 {
        let v = ymax * f64::from(i) / 4.0;
        let y = sy(v);
        let _ = writeln!(
            o,
            r##"<path d="M{:.2},{y:.2}H{ML}" stroke="#000000"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            ML - 4.0,
            ML - 6.0,
            y + 4.0,
            scalelab_core::telemetry::export::fmt_g6(v)
        );
        let x = x0 + (x1 - x0) * f64::from(i) / 4.0;
        let _ = writeln!(
            o,
            r##"<path d="M{:.2},{:.2}v4" stroke="#000000"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            sx(x),
            MT + ph,
            sx(x),
            MT + ph + 16.0,
            scalelab_core::telemetry::export::fmt_g6(x)
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        ML + pw / 2.0,
        H - 6.0
    );
    let _ = writeln!(
        o,
        r#"<text transform="translate(14,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MT + ph / 2.0,
        metric.label()
    );
    if let Some(s) = slo {
        let y = sy(s);
        let _ = writeln!(
            o,
            r##"<path d="M{ML},{y:.2}H{:.2}" stroke="#444444" stroke-dasharray="6,4"/><text x="{:.2}" y="{:.2}">SLO {}</text>"##,
            ML + pw,
            ML + pw + 4.0,
            y + 4.0,
            scalelab_core::telemetry::export::fmt_g6(s)
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            match y {
                Some(y) => {
                    let _ = write!(
                        d,
                        "{}{:.2},{:.2}",
                        if pen_down { 'L' } else { 'M' },
                        sx(x),
                        sy(y)
                    );
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                o,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
        }
        let ly = MT + 12.0 + 16.0 * k as f64;
        let _ = writeln!(
            o,
            r#"<path d="M{:.2},{:.2}h16" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            ML + pw + 10.0,
            ly - 4.0,
            ML + pw + 30.0,
            ly,
            esc(&s.name)
        );
    }
    o.push_str("</svg>\n");
    o
}
