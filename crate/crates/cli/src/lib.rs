//! `relkernel <experiment> --config <file> [--seed S] [--out DIR]`
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 property violation.

pub mod config;
pub mod experiments;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use serde_json::json;

use crate::config::Config;
use crate::experiments::{Outcome, RunError, Table};

pub const VERSION: &str = env!("RELKERNEL_VERSION");
pub const THREADS_ENV: &str = "RELKERNEL_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    LevyCheck,
    Kernel,
    Oracle,
    ChernoffRate,
    McCompare,
    PropertySuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::LevyCheck => "levy-check",
            Self::Kernel => "kernel",
            Self::Oracle => "oracle",
            Self::ChernoffRate => "chernoff-rate",
            Self::McCompare => "mc-compare",
            Self::PropertySuite => "property-suite",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "relkernel", version = VERSION, about = "Magnetic relativistic semigroup experiments")]
pub struct Cli {
    pub experiment: Experiment,
    #[arg(long)]
    pub config: PathBuf,
    /// overrides `seed` from the config file
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn fail(code: i32, kind: &str, message: &str) -> i32 {
    eprintln!("{}", json!({ "status": kind, "message": message }));
    code
}

fn worker_count() -> Result<usize, String> {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {s:?}")),
        },
        Err(_) => Ok(avail),
    }
}

fn write_csv(path: &Path, table: &Table) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| e.to_string())?;
    w.write_record(&table.header).map_err(|e| e.to_string())?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// Parses arguments and runs one experiment, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let name = cli.experiment.name();
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, "config_error", &format!("{}: {e}", cli.config.display())),
    };
    let mut cfg = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, "config_error", &e),
    };
    if let Some(exp) = &cfg.experiment {
        if exp != name {
            return fail(EXIT_CONFIG, "config_error", &format!("config is for {exp:?}, command line asks for {name:?}"));
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.validate_for(name) {
        return fail(EXIT_CONFIG, "config_error", &e);
    }
    let workers = match worker_count() {
        Ok(n) => n,
        Err(e) => return fail(EXIT_CONFIG, "config_error", &e),
    };
    if let Err(e) = fs::create_dir_all(&cli.out) {
        return fail(EXIT_RUNTIME, "runtime_error", &format!("{}: {e}", cli.out.display()));
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_RUNTIME, "runtime_error", &e.to_string()),
    };

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let result: Result<Outcome, RunError> = pool.install(|| match cli.experiment {
        Experiment::LevyCheck => experiments::levy_check(&cfg),
        Experiment::Kernel => experiments::kernel(&cfg),
        Experiment::Oracle => experiments::oracle(&cfg, &cli.out),
        Experiment::ChernoffRate => experiments::chernoff_rate(&cfg),
        Experiment::McCompare => experiments::mc_compare(&cfg),
        Experiment::PropertySuite => experiments::property_suite(&cfg),
    });
    let wall = clock.elapsed().as_secs_f64();
    let outcome = match result {
        Ok(o) => o,
        Err(RunError::Config(e)) => return fail(EXIT_CONFIG, "config_error", &e),
        Err(RunError::Runtime(e)) => return fail(EXIT_RUNTIME, "runtime_error", &e),
    };

    let csv_path = cli.out.join(format!("{name}.csv"));
    if let Err(e) = write_csv(&csv_path, &outcome.table) {
        return fail(EXIT_RUNTIME, "runtime_error", &e);
    }
    let status = if outcome.violations.is_empty() { "ok" } else { "property_violation" };
    let sidecar = json!({
        "experiment": name,
        "status": status,
        "version": VERSION,
        "seed": cfg.seed,
        "workers": workers,
        "wall_clock_seconds": wall,
        "started_unix": started,
        "csv": csv_path.file_name().map(|f| f.to_string_lossy().to_string()),
        "config_path": cli.config.display().to_string(),
        "config": cfg,
        "config_source": text,
        "summary": outcome.summary,
        "violations": outcome.violations,
    });
    let json_path = cli.out.join(format!("{name}.json"));
    if let Err(e) = fs::write(&json_path, serde_json::to_string_pretty(&sidecar).unwrap()) {
        return fail(EXIT_RUNTIME, "runtime_error", &e.to_string());
    }
    if outcome.violations.is_empty() {
        return EXIT_OK;
    }
    let mut violated: Vec<&str> = Vec::new();
    for v in &outcome.violations {
        if !violated.contains(&v.invariant.as_str()) {
            violated.push(&v.invariant);
        }
    }
    let report = json!({
        "status": "property_violation",
        "experiment": name,
        "violated_invariants": violated,
        "violations": outcome.violations,
    });
    let _ = fs::write(cli.out.join(format!("{name}.failure.json")), serde_json::to_string_pretty(&report).unwrap());
    eprintln!("{report}");
    EXIT_PROPERTY
}
