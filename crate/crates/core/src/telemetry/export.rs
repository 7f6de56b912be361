//! CSV and text rendering of run results. Output is byte-stable: LF line
//! endings, '.' decimal separator, fixed column order, 6 significant digits.

use std::fmt::Write as _;

use super::report::{RunReport, TimeseriesRow};

/// Shortest `%.6g`-style rendering: 6 significant digits, trailing zeros
/// dropped, exponent form outside `[1e-4, 1e6)`.
pub fn fmt_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", v.abs());
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if v < 0.0 { "-" } else { "" };
    if (-4..6).contains(&exp) {
        let (int_part, frac) = if exp >= 0 {
            let k = exp as usize + 1;
            (digits[..k].to_string(), digits[k..].to_string())
        } else {
            ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
        };
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac}")
        }
    } else {
        let frac = digits[1..].trim_end_matches('0');
        let m = if frac.is_empty() {
            digits[..1].to_string()
        } else {
            format!("{}.{}", &digits[..1], frac)
        };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{m}e{esign}{:02}", exp.abs())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g6).unwrap_or_default()
}

/// Quote a CSV field when it needs it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn timeseries_header(services: &[String]) -> String {
    let mut cols = vec!["step_ms".to_string()];
    for s in services {
        for c in [
            "ready",
            "desired",
            "utilization",
            "p90_observed_ms",
            "cpu_mcores",
        ] {
            cols.push(csv_field(&format!("{s}.{c}")));
        }
    }
    cols.extend(
        [
            "p90_observed_ms",
            "p90_ground_truth_ms",
            "status_errors",
            "downstream_errors",
            "masked_failures",
            "slo_violations",
            "ground_truth_violations",
            "core_minutes",
        ]
        .map(String::from),
    );
    cols.join(",")
}

fn timeseries_line(out: &mut String, r: &TimeseriesRow) {
    let _ = write!(out, "{}", r.step_ms);
    for s in &r.services {
        let _ = write!(
            out,
            ",{},{},{},{},{}",
            s.ready,
            s.desired,
            opt(s.utilization),
            opt(s.p90_observed_ms),
            fmt_g6(s.cpu_mcores)
        );
    }
    let _ = writeln!(
        out,
        ",{},{},{},{},{},{},{},{}",
        opt(r.p90_observed_ms),
        opt(r.p90_ground_truth_ms),
        r.status_errors,
        r.downstream_errors,
        r.masked_failures,
        r.slo_violations,
        r.ground_truth_violations,
        fmt_g6(r.core_minutes)
    );
}

pub fn timeseries_csv(report: &RunReport) -> String {
    let names: Vec<String> = report.services.iter().map(|s| s.name.clone()).collect();
    let mut out = timeseries_header(&names);
    out.push('\n');
    for r in &report.timeseries {
        timeseries_line(&mut out, r);
    }
    out
}

pub const DECISIONS_HEADER: &str =
    "sync_ms,service,current,target_pre_clamp,target_actuated,reason";

pub fn decisions_csv(report: &RunReport) -> String {
    let mut out = String::from(DECISIONS_HEADER);
    out.push('\n');
    for d in &report.decisions {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.sync_ms,
            csv_field(&d.service),
            d.current,
            d.target_pre_clamp,
            d.target_actuated,
            csv_field(&d.reason)
        );
    }
    out
}

/// Column names and values of the one-row summary.
pub fn summary_fields(report: &RunReport) -> Vec<(String, String)> {
    let l = &report.latency;
    let mut f: Vec<(String, String)> = vec![
        ("scenario".into(), csv_field(&report.scenario)),
        ("policy".into(), csv_field(&report.policy)),
        ("seed".into(), report.seed.to_string()),
        ("duration_ms".into(), report.duration_ms.to_string()),
        ("slo_ms".into(), fmt_g6(report.slo_ms)),
        ("requests".into(), report.requests.to_string()),
        ("finished".into(), report.finished.to_string()),
        ("slo_violations".into(), report.slo_violations.to_string()),
        (
            "ground_truth_violations".into(),
            report.ground_truth_violations.to_string(),
        ),
        ("masked_failures".into(), report.masked_failures.to_string()),
        ("errors".into(), report.errors.to_string()),
        (
            "downstream_errors".into(),
            report.downstream_error_total().to_string(),
        ),
        ("cpu_core_minutes".into(), fmt_g6(report.cpu_core_minutes)),
        ("observed_mean_ms".into(), opt(l.observed_mean_ms)),
        ("observed_p90_ms".into(), opt(l.observed_p90_ms)),
        ("ground_truth_mean_ms".into(), opt(l.ground_truth_mean_ms)),
        ("ground_truth_p90_ms".into(), opt(l.ground_truth_p90_ms)),
        ("quota_exceeded".into(), report.quota_exceeded.to_string()),
        (
            "graph_unavailable_syncs".into(),
            report.graph_unavailable_syncs.to_string(),
        ),
        (
            "invariant_violations".into(),
            report.invariant_violations.len().to_string(),
        ),
    ];
    for s in &report.services {
        f.push((
            csv_field(&format!("max_replicas.{}", s.name)),
            s.max_replicas.to_string(),
        ));
    }
    for s in &report.services {
        f.push((
            csv_field(&format!("max_ready.{}", s.name)),
            s.max_ready.to_string(),
        ));
    }
    for s in &report.services {
        f.push((
            csv_field(&format!("restarts.{}", s.name)),
            s.restarts.to_string(),
        ));
    }
    f
}

pub fn summary_csv(report: &RunReport) -> String {
    let f = summary_fields(report);
    let header: Vec<&str> = f.iter().map(|(k, _)| k.as_str()).collect();
    let values: Vec<&str> = f.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), values.join(","))
}

pub fn summary_txt(report: &RunReport) -> String {
    let f = summary_fields(report);
    let width = f.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in &f {
        let v = if v.is_empty() { "-" } else { v.as_str() };
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    if !report.invariant_violations.is_empty() {
        let _ = writeln!(
            out,
            "\ninvariant violations: {}",
            report.invariant_violations.len()
        );
        for m in report.invariant_violations.iter().take(20) {
            let _ = writeln!(out, "  {m}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_formatting() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(-0.0), "0");
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(0.5), "0.5");
        assert_eq!(fmt_g6(123.456789), "123.457");
        assert_eq!(fmt_g6(999999.5), "1e+06");
        assert_eq!(fmt_g6(123456.0), "123456");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(0.0001), "0.0001");
        assert_eq!(fmt_g6(0.00001234), "1.234e-05");
        assert_eq!(fmt_g6(-2.5), "-2.5");
        assert_eq!(fmt_g6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_g6(100.0), "100");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn timeseries_header_is_stable() {
        let h = timeseries_header(&["fe".into()]);
        assert_eq!(
            h,
            "step_ms,fe.ready,fe.desired,fe.utilization,fe.p90_observed_ms,fe.cpu_mcores,\
             p90_observed_ms,p90_ground_truth_ms,status_errors,downstream_errors,masked_failures,\
             slo_violations,ground_truth_violations,core_minutes"
        );
    }
}
