use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scalelab_cli::plot::{extract, Metric};

const TIMESERIES_HEADER: &str = "step_ms,\
front-end.ready,front-end.desired,front-end.utilization,front-end.p90_observed_ms,front-end.cpu_mcores,\
user.ready,user.desired,user.utilization,user.p90_observed_ms,user.cpu_mcores,\
carts.ready,carts.desired,carts.utilization,carts.p90_observed_ms,carts.cpu_mcores,\
p90_observed_ms,p90_ground_truth_ms,status_errors,downstream_errors,masked_failures,\
slo_violations,ground_truth_violations,core_minutes";

const SUMMARY_HEADER: &str = "scenario,policy,seed,duration_ms,slo_ms,requests,finished,\
slo_violations,ground_truth_violations,masked_failures,errors,downstream_errors,cpu_core_minutes,\
observed_mean_ms,observed_p90_ms,ground_truth_mean_ms,ground_truth_p90_ms,quota_exceeded,\
graph_unavailable_syncs,invariant_violations,\
max_replicas.front-end,max_replicas.user,max_replicas.carts,\
max_ready.front-end,max_ready.user,max_ready.carts,\
restarts.front-end,restarts.user,restarts.carts";

fn preset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(rel)
}

fn scalelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalelab"))
        .args(args)
        .env_remove("SCALELAB_OUT")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn first_line(p: &Path) -> String {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn validate_exit_codes() {
    let ok = scalelab(&[
        "validate",
        "--scenario",
        s(&preset("sockshop-default.json")),
    ]);
    assert_eq!(ok.status.code(), Some(0));

    let warn = scalelab(&["validate", "--scenario", s(&preset("g05.json"))]);
    assert_eq!(warn.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&warn.stdout).contains("restart loop likely"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"name": 1}"#).unwrap();
    let out = scalelab(&["validate", "--scenario", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("error:"));

    let missing = scalelab(&["validate", "--scenario", "/no/such/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn run_writes_outputs_with_stable_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = scalelab(&[
        "run",
        "--scenario",
        s(&preset("sockshop-default.json")),
        "--duration-override",
        "30000",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    assert_eq!(first_line(&out.join("timeseries.csv")), TIMESERIES_HEADER);
    assert_eq!(first_line(&out.join("summary.csv")), SUMMARY_HEADER);
    assert_eq!(
        first_line(&out.join("decisions.csv")),
        "sync_ms,service,current,target_pre_clamp,target_actuated,reason"
    );
    assert_eq!(
        first_line(&out.join("gap_report.csv")),
        "id,name,challenge,type,phase,status"
    );
    let ts = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().count(), 1 + 30);
    assert!(!ts.contains('\r'));
    assert!(out.join("summary.txt").exists() && out.join("gap_report.txt").exists());
}

#[test]
fn run_is_repeatable_and_seed_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let r = scalelab(&[
            "run",
            "--scenario",
            s(&preset("sockshop-default.json")),
            "--duration-override",
            "60000",
            "--seed",
            seed,
            "--out",
            s(&out),
        ]);
        assert_eq!(r.status.code(), Some(0));
        fs::read_to_string(out.join("timeseries.csv")).unwrap()
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    assert_ne!(run("a", "5"), run("c", "6"));
}

#[test]
fn out_root_env_places_runs_by_scenario_name() {
    let dir = tempfile::tempdir().unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_scalelab"))
        .args([
            "run",
            "--scenario",
            s(&preset("g03.json")),
            "--duration-override",
            "5000",
        ])
        .env("SCALELAB_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert!(dir.path().join("g03/summary.csv").exists());
}

#[test]
fn runtime_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let r = scalelab(&[
        "run",
        "--scenario",
        s(&preset("sockshop-default.json")),
        "--duration-override",
        "1000",
        "--out",
        s(&blocker.join("sub")),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn compare_keeps_order_and_marks_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let r = scalelab(&[
        "compare",
        "--scenario",
        s(&preset("sockshop-default.json")),
        "--policies",
        "PBScaler,KHPA,bogus",
        "--duration-override",
        "60000",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&r.stdout), csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "policy,slo_violations,cpu_core_minutes,status");
    assert!(lines[1].starts_with("PBScaler,") && lines[1].ends_with(",ok"));
    assert!(lines[2].starts_with("KHPA,") && lines[2].ends_with(",ok"));
    assert_eq!(lines[3], r#"bogus,,,"failed: unknown policy ""bogus""""#);
    assert!(out.join("00-pbscaler/summary.csv").exists());
    assert!(out.join("01-khpa/summary.csv").exists());

    let one = scalelab(&[
        "compare",
        "--scenario",
        s(&preset("sockshop-default.json")),
        "--policies",
        "KHPA",
        "--out",
        s(&out),
    ]);
    assert_eq!(one.status.code(), Some(2));
}

#[test]
fn gap_report_lists_all_ten() {
    let r = scalelab(&["gap-report", "--scenario", s(&preset("g06.json"))]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8_lossy(&r.stdout);
    for i in 1..=10 {
        assert!(text.contains(&format!("G{i} ")), "missing G{i}");
    }
    let g6 = text.lines().find(|l| l.starts_with("G6 ")).unwrap();
    assert!(g6.ends_with("active"));
}

fn run_preset(dir: &Path, rel: &str) -> PathBuf {
    let out = dir.join(Path::new(rel).file_stem().unwrap());
    let r = scalelab(&["run", "--scenario", s(&preset(rel)), "--out", s(&out)]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    out
}

#[test]
fn plot_draws_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_preset(dir.path(), "acceptance/call-graph-fan-out.json");
    for m in ["latency", "replicas", "cpu", "utilization"] {
        let svg = dir.path().join(format!("{m}.svg"));
        let r = scalelab(&["plot", "--run", s(&run), "--metric", m, "--out", s(&svg)]);
        assert_eq!(r.status.code(), Some(0), "{m}");
        let text = fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert!(text.contains("front-end"));
        if m == "latency" {
            assert!(text.contains("SLO 150"));
        }
    }
    let bad = scalelab(&[
        "plot",
        "--run",
        s(&run),
        "--metric",
        "bandwidth",
        "--out",
        "x.svg",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

/// The masked run's plotted end-to-end latency sits well below the
/// propagating run's, though both overload carts identically.
#[test]
fn masking_hides_latency_in_plots() {
    let dir = tempfile::tempdir().unwrap();
    let mean = |rel: &str| {
        let run = run_preset(dir.path(), rel);
        let csv = fs::read_to_string(run.join("timeseries.csv")).unwrap();
        let series = extract(&csv, Metric::Latency).unwrap();
        series
            .iter()
            .find(|s| s.name == "end-to-end")
            .unwrap()
            .mean()
            .unwrap()
    };
    let masked = mean("acceptance/error-masking.json");
    let propagated = mean("acceptance/error-propagation.json");
    assert!(
        masked < 0.5 * propagated,
        "masked {masked} vs propagated {propagated}"
    );
}
