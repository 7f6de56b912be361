use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scalelab_cli::{
    compare_cmd, gap_report_cmd, output_dir, plot::Metric, plot_cmd, run_cmd, validate_cmd,
    CmdError, Exit, Overrides,
};

#[derive(Parser)]
#[command(
    name = "scalelab",
    version,
    about = "Autoscaling gap simulator for a three-service login flow"
)]
struct Cli {
    /// Default output root when --out is not given.
    #[arg(long, env = "SCALELAB_OUT", global = true)]
    out_root: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a scenario file and report errors and warnings.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run one scenario and write its CSV and text outputs.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the scenario's duration (ms).
        #[arg(long)]
        duration_override: Option<u64>,
    },
    /// Run several policies on the same scenario and seed.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated, e.g. KHPA,HEAT,PBScaler.
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        duration_override: Option<u64>,
    },
    /// Draw an SVG chart from a run directory.
    Plot {
        /// Directory written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Show which gaps a scenario injects or remediates.
    GapReport {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result: Result<(), CmdError> = match cli.cmd {
        Cmd::Validate { scenario } => {
            let (code, text) = validate_cmd(&scenario);
            print!("{text}");
            return ExitCode::from(code as u8);
        }
        Cmd::Run {
            scenario,
            seed,
            out,
            duration_override,
        } => {
            let dir = output_dir(out, cli.out_root, &scenario);
            let ov = Overrides {
                seed,
                duration_ms: duration_override,
            };
            run_cmd(&scenario, &ov, &dir).map(|r| {
                println!(
                    "{}: {} requests, {} SLO violations, {:.3} core-minutes -> {}",
                    r.policy,
                    r.requests,
                    r.slo_violations,
                    r.cpu_core_minutes,
                    dir.display()
                );
            })
        }
        Cmd::Compare {
            scenario,
            policies,
            seed,
            out,
            duration_override,
        } => {
            let dir = output_dir(out, cli.out_root, &scenario);
            let ov = Overrides {
                seed,
                duration_ms: duration_override,
            };
            compare_cmd(&scenario, &ov, &policies, &dir).map(|csv| print!("{csv}"))
        }
        Cmd::Plot { run, metric, out } => plot_cmd(&run, metric, &out),
        Cmd::GapReport { scenario } => gap_report_cmd(&scenario).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::from(Exit::Ok as u8),
        Err(e) => {
            eprint!("{e}");
            if matches!(e, CmdError::Runtime(_)) {
                eprintln!();
            }
            ExitCode::from(e.exit() as u8)
        }
    }
}
