//! Command implementations behind the `scalelab` binary.

pub mod plot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::Context;
use scalelab_core::autoscalers::{AutoscalerSpec, PolicyKind};
use scalelab_core::gaps::{render_csv, render_text};
use scalelab_core::telemetry::export::{self, fmt_g6};
use scalelab_core::{assemble, scenario, RunReport, ScenarioConfig, Simulation};

/// Exit status of a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Invalid = 2,
    Failed = 3,
}

#[derive(Debug)]
pub enum CmdError {
    /// The scenario or arguments did not validate.
    Invalid(Vec<String>),
    Runtime(anyhow::Error),
}

impl CmdError {
    pub fn exit(&self) -> Exit {
        match self {
            CmdError::Invalid(_) => Exit::Invalid,
            CmdError::Runtime(_) => Exit::Failed,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Invalid(errs) => {
                for e in errs {
                    writeln!(f, "error: {e}")?;
                }
                Ok(())
            }
            CmdError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Runtime(e)
    }
}

/// Scenario-level overrides shared by `run` and `compare`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub duration_ms: Option<u64>,
}

/// Load, apply overrides, and validate. Warnings go to the log.
pub fn prepare(path: &Path, ov: &Overrides) -> Result<ScenarioConfig, CmdError> {
    let mut sc = scenario::load(path).map_err(|e| CmdError::Invalid(vec![e.to_string()]))?;
    if let Some(s) = ov.seed {
        sc.seed = s;
    }
    if let Some(d) = ov.duration_ms {
        sc.duration_ms = d;
    }
    let v = scenario::validate(&sc);
    for w in &v.warnings {
        log::warn!("{w}");
    }
    if !v.is_ok() {
        return Err(CmdError::Invalid(v.errors));
    }
    Ok(sc)
}

/// Text of `validate`: one line per finding, errors first.
pub fn validate_cmd(path: &Path) -> (Exit, String) {
    let v = scenario::validate_file(path);
    let mut out = String::new();
    for e in &v.errors {
        let _ = writeln!(out, "error: {e}");
    }
    for w in &v.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if v.is_ok() {
        let _ = writeln!(out, "ok: {}", path.display());
        (Exit::Ok, out)
    } else {
        (Exit::Invalid, out)
    }
}

pub fn simulate(sc: &ScenarioConfig) -> anyhow::Result<RunReport> {
    let asm = assemble(sc)?;
    Ok(Simulation::new(&asm)?.run())
}

/// Write the standard run outputs for `report` into `dir`.
pub fn write_run(dir: &Path, sc: &ScenarioConfig, report: &RunReport) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let status = assemble(sc)?.status;
    let files = [
        ("timeseries.csv", export::timeseries_csv(report)),
        ("decisions.csv", export::decisions_csv(report)),
        ("summary.txt", export::summary_txt(report)),
        ("summary.csv", export::summary_csv(report)),
        ("gap_report.txt", render_text(&sc.name, &status)),
        ("gap_report.csv", render_csv(&status)),
    ];
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn run_cmd(path: &Path, ov: &Overrides, out: &Path) -> Result<RunReport, CmdError> {
    let sc = prepare(path, ov)?;
    let report = simulate(&sc)?;
    write_run(out, &sc, &report)?;
    Ok(report)
}

pub const COMPARE_HEADER: &str = "policy,slo_violations,cpu_core_minutes,status";

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub policy: String,
    pub result: Result<(u64, f64), String>,
}

/// The scenario with its autoscaler swapped for `kind`. Parameters carry
/// over only when the scenario already names the same policy.
pub fn with_policy(sc: &ScenarioConfig, kind: PolicyKind) -> ScenarioConfig {
    let mut s = sc.clone();
    if s.autoscaler.policy != kind {
        s.autoscaler = AutoscalerSpec {
            policy: kind,
            params: serde_json::Value::Null,
        };
    }
    s
}

/// Run every policy on the same scenario and seed, concurrently. Rows keep
/// the input order; a failing policy yields a failed row, not an error.
pub fn compare(sc: &ScenarioConfig, policies: &[String], out: Option<&Path>) -> Vec<CompareRow> {
    let results: Vec<Result<RunReport, String>> = thread::scope(|scope| {
        let handles: Vec<_> = policies
            .iter()
            .map(|p| {
                scope.spawn(move || -> Result<RunReport, String> {
                    let kind =
                        PolicyKind::parse(p).ok_or_else(|| format!("unknown policy {p:?}"))?;
                    let s = with_policy(sc, kind);
                    simulate(&s).map_err(|e| format!("{e:#}"))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err("simulation panicked".into()))
            })
            .collect()
    });
    policies
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (p, r))| {
            let result = r.and_then(|report| {
                if let Some(dir) = out {
                    let kind = PolicyKind::parse(p).expect("parsed above");
                    let sub = dir.join(format!("{i:02}-{}", kind.as_str()));
                    write_run(&sub, &with_policy(sc, kind), &report)
                        .map_err(|e| format!("{e:#}"))?;
                }
                Ok((report.slo_violations, report.cpu_core_minutes))
            });
            CompareRow {
                policy: p.clone(),
                result,
            }
        })
        .collect()
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for r in rows {
        let policy = export::csv_field(&r.policy);
        let _ = match &r.result {
            Ok((v, c)) => writeln!(out, "{policy},{v},{},ok", fmt_g6(*c)),
            Err(e) => writeln!(
                out,
                "{policy},,,{}",
                export::csv_field(&format!("failed: {e}"))
            ),
        };
    }
    out
}

pub fn compare_cmd(
    path: &Path,
    ov: &Overrides,
    policies: &[String],
    out: &Path,
) -> Result<String, CmdError> {
    if policies.len() < 2 {
        return Err(CmdError::Invalid(vec![
            "compare needs at least two policies".into(),
        ]));
    }
    let sc = prepare(path, ov)?;
    let rows = compare(&sc, policies, Some(out));
    let csv = compare_csv(&rows);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("compare.csv"), &csv).context("writing compare.csv")?;
    Ok(csv)
}

pub fn gap_report_cmd(path: &Path) -> Result<String, CmdError> {
    let sc = prepare(path, &Overrides::default())?;
    let asm = assemble(&sc).map_err(|e| CmdError::Invalid(vec![e.to_string()]))?;
    Ok(render_text(&sc.name, &asm.status))
}

/// SLO recorded in a run's summary, if any.
fn summary_slo(run_dir: &Path) -> Option<f64> {
    let text = fs::read_to_string(run_dir.join("summary.csv")).ok()?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next()?.split(',').collect();
    let values: Vec<&str> = lines.next()?.split(',').collect();
    let i = header.iter().position(|c| *c == "slo_ms")?;
    values.get(i)?.parse().ok()
}

pub fn plot_cmd(run_dir: &Path, metric: plot::Metric, out: &Path) -> Result<(), CmdError> {
    let ts = run_dir.join("timeseries.csv");
    let csv = fs::read_to_string(&ts).with_context(|| format!("reading {}", ts.display()))?;
    let series = plot::extract(&csv, metric)?;
    let svg = plot::render(&series, metric, summary_slo(run_dir));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

/// `--out` when given, else `$SCALELAB_OUT/<scenario stem>`, else `out/<stem>`.
pub fn output_dir(out: Option<PathBuf>, root: Option<PathBuf>, scenario: &Path) -> PathBuf {
    out.unwrap_or_else(|| {
        let stem = scenario
            .file_stem()
            .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        root.unwrap_or_else(|| PathBuf::from("out")).join(stem)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_csv_marks_failures() {
        let rows = vec![
            CompareRow {
                policy: "KHPA".into(),
                result: Ok((12, 3.5)),
            },
            CompareRow {
                policy: "bogus".into(),
                result: Err("unknown policy".into()),
            },
        ];
        assert_eq!(
            compare_csv(&rows),
            "policy,slo_violations,cpu_core_minutes,status\nKHPA,12,3.5,ok\nbogus,,,failed: unknown policy\n"
        );
    }

    #[test]
    fn output_dir_precedence() {
        let sc = Path::new("presets/g05.json");
        assert_eq!(
            output_dir(Some("x".into()), Some("r".into()), sc),
            PathBuf::from("x")
        );
        assert_eq!(
            output_dir(None, Some("r".into()), sc),
            PathBuf::from("r/g05")
        );
        assert_eq!(output_dir(None, None, sc), PathBuf::from("out/g05"));
    }
}
