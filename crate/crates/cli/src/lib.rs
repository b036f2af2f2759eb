//! `qaw`: validates run configurations and drives the qaw-core experiments, writing
//! deterministic CSV reports plus a JSON run manifest.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub mod config;
mod experiments;
pub mod report;

use config::{Experiment, RunConfig};
use experiments::Context;
use report::{sha256_hex, write_atomic, Output};

/// Failures echoed per experiment; the rest only go to failures.json.
const PRINTED_FAILURES: usize = 10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qaw", version, about = "Experiments on truncated mixed q-deformed Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a config against every precondition and echo it normalized.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run experiments and write reports.
    Run {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args, Debug)]
struct RunOpts {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` in the config; defaults to `reports`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    Fock,
    Moments,
    Modular,
    Multipliers,
    Ultra,
    All,
}

impl Target {
    fn experiments(self) -> Vec<Experiment> {
        match self {
            Target::Fock => vec![Experiment::Fock],
            Target::Moments => vec![Experiment::Moments],
            Target::Modular => vec![Experiment::Modular],
            Target::Multipliers => vec![Experiment::Multipliers],
            Target::Ultra => vec![Experiment::Ultra],
            Target::All => Experiment::ALL.to_vec(),
        }
    }
}

/// Parses `args` (including the program name) and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { target, opts } => run(target, &opts),
    }
}

fn load(path: &Path) -> Result<RunConfig, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    RunConfig::parse(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INVALID
    })
}

fn print_violations(path: &Path, violations: &[String]) {
    println!("invalid: {} ({} violations)", path.display(), violations.len());
    for v in violations {
        println!("  - {v}");
    }
}

fn validate(path: &Path) -> i32 {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match cfg.validate() {
        Ok(_) => {
            println!("valid");
            print!("{}", cfg.to_toml());
            EXIT_OK
        }
        Err(v) => {
            print_violations(path, &v);
            EXIT_INVALID
        }
    }
}

fn run(target: Target, opts: &RunOpts) -> i32 {
    let started = Instant::now();
    let mut cfg = match load(&opts.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if !(opts.tolerance_scale.is_finite() && opts.tolerance_scale > 0.0) {
        eprintln!("error: --tolerance-scale {} must be positive and finite", opts.tolerance_scale);
        return EXIT_INVALID;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let out_dir = opts.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("reports"));
    let exps = target.experiments();
    for &e in &exps {
        cfg.ensure(e);
    }
    let setup = match cfg.validate() {
        Ok(s) => s,
        Err(v) => {
            print_violations(&opts.config, &v);
            return EXIT_INVALID;
        }
    };
    let hash = cfg.hash();
    let tol = cfg.tolerances.scaled(opts.tolerance_scale);

    let results: Vec<(Experiment, qaw_core::Result<Output>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = exps
            .iter()
            .map(|&e| {
                let ctx = Context { config: &cfg, setup: &setup, tol: tol.clone(), seed: e.seed(cfg.seed) };
                (e, scope.spawn(move || experiments::run(e, &ctx)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(e, h)| {
                let r = h.join().unwrap_or_else(|p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".into());
                    Err(qaw_core::Error::Numerical(format!("experiment panicked: {msg}")))
                });
                (e, r)
            })
            .collect()
    });

    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_IO;
    }
    let mut io_failed = false;
    let mut failed = false;
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (e, result) in results {
        let seed = e.seed(cfg.seed);
        match result {
            Ok(output) => {
                let mut files = Vec::new();
                for table in &output.tables {
                    let file = format!("{}.csv", table.name);
                    let path = out_dir.join(&file);
                    match table.render(&hash, seed).and_then(|bytes| write_atomic(&path, &bytes).map(|_| bytes)) {
                        Ok(bytes) => files.push(json!({ "name": file, "sha256": sha256_hex(&bytes), "rows": table.rows.len() })),
                        Err(err) => {
                            eprintln!("error: cannot write {}: {err}", path.display());
                            io_failed = true;
                        }
                    }
                }
                let n_fail = output.failures.len();
                failed |= n_fail > 0;
                println!("{}: {} tables, {} failures", e.name(), output.tables.len(), n_fail);
                for (k, f) in output.failures.iter().enumerate() {
                    if k < PRINTED_FAILURES {
                        println!("  FAIL {} ({}): {}", f.invariant, f.experiment, f.detail);
                    } else if k == PRINTED_FAILURES {
                        println!("  ... {} more in failures.json", n_fail - k);
                    }
                    let mut entry = serde_json::to_value(f).unwrap_or(Value::Null);
                    entry["replay"]["experiment_seed"] = json!(seed);
                    failures.push(entry);
                }
                entries.push(json!({
                    "name": e.name(),
                    "seed": seed,
                    "status": if n_fail == 0 { "pass" } else { "fail" },
                    "failures": n_fail,
                    "files": files,
                }));
            }
            Err(err) => {
                failed = true;
                eprintln!("error: {}: {err}", e.name());
                failures.push(json!({
                    "experiment": e.name(),
                    "invariant": "module_error",
                    "detail": err.to_string(),
                    "replay": { "experiment_seed": seed },
                }));
                entries.push(json!({ "name": e.name(), "seed": seed, "status": "error", "error": err.to_string() }));
            }
        }
    }

    let failures_path = out_dir.join("failures.json");
    if failures.is_empty() {
        if failures_path.exists() && fs::remove_file(&failures_path).is_err() {
            io_failed = true;
        }
    } else {
        let doc = json!({ "config_hash": hash, "seed": cfg.seed, "tolerance_scale": opts.tolerance_scale, "config": cfg.to_toml(), "failures": failures });
        let bytes = serde_json::to_vec_pretty(&doc).expect("json");
        if let Err(err) = write_atomic(&failures_path, &bytes) {
            eprintln!("error: cannot write {}: {err}", failures_path.display());
            io_failed = true;
        }
    }

    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "tool": "qaw",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": qaw_core::VERSION,
        "config_path": opts.config.display().to_string(),
        "config_hash": hash,
        "seed": cfg.seed,
        "tolerance_scale": opts.tolerance_scale,
        "experiments": entries,
        "failures": failures.len(),
        "status": if failed { "fail" } else { "pass" },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "finished_unix": started_unix,
    });
    let manifest_path = out_dir.join("manifest.json");
    if let Err(err) = write_atomic(&manifest_path, &serde_json::to_vec_pretty(&manifest).expect("json")) {
        eprintln!("error: cannot write {}: {err}", manifest_path.display());
        io_failed = true;
    }
    println!("status: {} ({} failures) -> {}", if failed { "fail" } else { "pass" }, failures.len(), out_dir.display());
    if io_failed {
        EXIT_IO
    } else if failed {
        EXIT_ASSERTION
    } else {
        EXIT_OK
    }
}
