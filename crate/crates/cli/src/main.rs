//! `sympopt`: run optimizations, check invariants, generate test matrices.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sympopt_core::costs::{random_j_symmetric, random_symmetric};
use sympopt_core::io::matrix_to_json;
use sympopt_core::manifold::{certify_symplectic, random_symplectic};
use sympopt_core::validation::{run_checks, CheckOptions, Fault, Suite};
use sympopt_core::{newton, steepest_descent, Dim, Status};

use crate::config::OptimizerKind;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "sympopt", version, about = "Riemannian optimization on the real symplectic group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization described by a JSON config.
    Run {
        config: PathBuf,
        /// Directory for trace.jsonl and summary.json; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write trace.csv (requires --out).
        #[arg(long, requires = "out")]
        csv: bool,
    },
    /// Run the invariant suites and print a pass/fail table.
    Check {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=8))]
        n_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Write a random structured matrix as matrix JSON.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Entry range of the underlying uniform samples.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Gradients,
    Hessians,
    Retraction,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipGammaSign,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    Symplectic,
    JSymmetric,
    Symmetric,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SYMPOPT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("SYMPOPT_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("cannot configure thread pool: {e}"))
}

fn cmd_run(config: PathBuf, out: Option<PathBuf>, csv: bool) -> u8 {
    let prepared = match config::load(&config).and_then(|c| c.prepare()) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let started = Instant::now();
    let cost = prepared.cost.model();
    let result = match prepared.optimizer {
        OptimizerKind::SteepestDescent => steepest_descent(cost, &prepared.start, &prepared.settings),
        OptimizerKind::Newton => newton(cost, &prepared.start, &prepared.settings),
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    let trace = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: optimizer failed: {e}");
            return EXIT_NOT_CONVERGED;
        }
    };
    let summary = output::Summary::of(&trace, wall_time_s);
    let written = match &out {
        Some(dir) => output::write_dir(dir, &trace, &summary, csv),
        None => output::write_stdout(&trace, &summary),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    if trace.status == Status::Converged {
        0
    } else {
        eprintln!("optimizer stopped with status {}", trace.status.as_str());
        EXIT_NOT_CONVERGED
    }
}

fn cmd_check(suite: SuiteArg, n_max: u64, seed: u64, fault: Option<FaultArg>) -> u8 {
    let suites: Vec<Suite> = match suite {
        SuiteArg::Gradients => vec![Suite::Gradients],
        SuiteArg::Hessians => vec![Suite::Hessians],
        SuiteArg::Retraction => vec![Suite::Retraction],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let opts = CheckOptions {
        n_max: n_max as usize,
        seed,
        fault: fault.map(|FaultArg::FlipGammaSign| Fault::FlipGammaSign),
    };
    let rows = run_checks(&suites, &opts);
    print!("{}", output::check_table(&rows));
    let failures: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    for r in &failures {
        eprintln!(
            "FAILED {}/{}: worst {:.3e} > tol {:.1e} (seed {})",
            r.suite.name(),
            r.invariant,
            r.worst,
            r.tol,
            r.seed
        );
    }
    if failures.is_empty() {
        0
    } else {
        EXIT_FAILURE
    }
}

fn cmd_generate(kind: Kind, n: u64, seed: u64, out: PathBuf, scale: f64) -> u8 {
    let generated = (|| {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(format!("--scale must be non-negative, got {scale}"));
        }
        let dim = Dim::new(n as usize).map_err(|e| e.to_string())?;
        let m = match kind {
            Kind::Symplectic => {
                let p = random_symplectic(dim, seed, scale).map_err(|e| e.to_string())?;
                let (ok, residual) = certify_symplectic(p.matrix(), 1e-10).map_err(|e| e.to_string())?;
                if !ok {
                    return Err(format!("generated matrix failed certification (residual {residual:e})"));
                }
                p.into_matrix()
            }
            Kind::JSymmetric => random_j_symmetric(dim, seed, scale).map_err(|e| e.to_string())?,
            Kind::Symmetric => random_symmetric(dim, seed, scale),
        };
        matrix_to_json(&m).map_err(|e| e.to_string())
    })();
    let text = match generated {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    match std::fs::write(&out, text) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            EXIT_FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let code = match cli.command {
        Command::Run { config, out, csv } => cmd_run(config, out, csv),
        Command::Check {
            suite,
            n_max,
            seed,
            inject_fault,
        } => cmd_check(suite, n_max, seed, inject_fault),
        Command::Generate {
            kind,
            n,
            seed,
            out,
            scale,
        } => cmd_generate(kind, n, seed, out, scale),
    };
    ExitCode::from(code)
}
