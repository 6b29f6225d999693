use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use erato_core::checker::{check_atomicity_tagged_with, extract_history, CheckMode};
use erato_core::harness::{
    parse_config, parse_grid, read_rows, run_scenario, summarize_rows, sweep, write_run,
    write_summary, Outcome, SweepOptions,
};
use erato_core::metrics::summarize;
use erato_core::netsim::Trace;
use erato_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_ATOMICITY: u8 = 3;
const EXIT_LIVENESS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "erato",
    version,
    about = "Simulate and check atomic register protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Seed for the run (or first seed of every sweep cell).
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound of the per-message jitter, in seconds.
    #[arg(long)]
    jitter_max: Option<f64>,
    /// Simulated-time cap, in seconds.
    #[arg(long)]
    cap_seconds: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes config, trace, verdict and per-op CSV.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Add a wall-clock compute column to the CSV.
        #[arg(long)]
        compute: bool,
    },
    /// Run every cell of a grid file.
    Sweep {
        grid: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        compute: bool,
        /// Keep every run's trace log.
        #[arg(long)]
        traces: bool,
    },
    /// Check the atomicity of a saved trace.
    Check {
        trace: PathBuf,
        /// Also check incomplete writes whose tag is known.
        #[arg(long)]
        strict: bool,
    },
    /// Summarise per-operation CSV files.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Config(_))));
            ExitCode::from(if config_error { EXIT_CONFIG } else { 1 })
        }
    }
}

fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Ok => 0,
        Outcome::AtomicityViolation => EXIT_ATOMICITY,
        Outcome::LivenessCap => EXIT_LIVENESS,
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn dispatch(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Run {
            config,
            overrides,
            out_dir,
            compute,
        } => {
            let mut cfg = parse_config(&read(&config)?)?;
            if let Some(s) = overrides.seed {
                cfg.seed = s;
            }
            if let Some(j) = overrides.jitter_max {
                cfg.jitter_max = j;
            }
            if let Some(c) = overrides.cap_seconds {
                cfg.cap_seconds = c;
            }
            let run = run_scenario(&cfg)?;
            let files = write_run(&out_dir, &run, compute)?;
            for g in summarize(&run.stats).groups {
                println!(
                    "{} {}: {} ops, mean {:.6} s, p95 {:.6} s, exchanges {:?}",
                    g.algorithm, g.kind, g.count, g.mean, g.p95, g.exchanges
                );
            }
            println!("verdict: {}", run.verdict);
            if run.trace.incomplete {
                println!("liveness: time cap reached with operations pending");
            }
            println!("wrote {}", files.csv.display());
            Ok(outcome_code(run.outcome()))
        }
        Command::Sweep {
            grid,
            overrides,
            out_dir,
            jobs,
            compute,
            traces,
        } => {
            let mut grid = parse_grid(&read(&grid)?)?;
            if let Some(s) = overrides.seed {
                grid.set_base("seed", s as i64)?;
            }
            if let Some(j) = overrides.jitter_max {
                grid.set_base("jitter_max", j)?;
            }
            if let Some(c) = overrides.cap_seconds {
                grid.set_base("cap_seconds", c)?;
            }
            let opts = SweepOptions {
                parallelism: jobs,
                with_compute: compute,
                write_traces: traces,
            };
            let report = sweep(&grid, &out_dir, &opts)?;
            print!("{}", report.render());
            match &report.summary {
                Some(p) => println!("summary: {}", p.display()),
                None if report.cells.is_empty() => println!("empty grid: nothing to run"),
                None => eprintln!("sweep failed; no summary written"),
            }
            Ok(outcome_code(report.worst_outcome()))
        }
        Command::Check { trace, strict } => {
            let trace = Trace::parse_log(&read(&trace)?)?;
            let mode = if strict {
                CheckMode::Strict
            } else {
                CheckMode::Completed
            };
            let verdict = check_atomicity_tagged_with(&extract_history(&trace), mode)?;
            print!("{}", verdict.report());
            if !verdict.ok() {
                Ok(EXIT_ATOMICITY)
            } else if trace.incomplete {
                println!("liveness\tincomplete");
                Ok(EXIT_LIVENESS)
            } else {
                Ok(0)
            }
        }
        Command::Report { csv, out } => {
            let mut rows = Vec::new();
            for path in &csv {
                let file =
                    fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                rows.extend(
                    read_rows(file).with_context(|| format!("reading {}", path.display()))?,
                );
            }
            let summary = summarize_rows(&rows)?;
            match out {
                Some(path) => write_summary(fs::File::create(&path)?, &summary)?,
                None => write_summary(std::io::stdout().lock(), &summary)?,
            }
            Ok(0)
        }
    }
}
