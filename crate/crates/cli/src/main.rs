use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use nsac::diagnostics::{coercivity_suite, random_admissible_state, DiagnosticParams};
use nsac::fields::{Boundary, Grid};
use nsac::harness::{self, SweepConfig, SUMMARY_COLUMNS};
use nsac::potential::PotentialSpec;
use nsac::reference::{SharpKind, SharpSolution};
use nsac::{Error, Vec2};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

/// Phase-field two-phase flow runs and sharp-interface convergence studies.
#[derive(Parser, Debug)]
#[command(name = "nsac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a single epsilon of a sweep configuration.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        epsilon: f64,
        /// Output directory; defaults to the configured one.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every epsilon of a configuration and fit convergence rates.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides the configured worker count.
        #[arg(short, long)]
        workers: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Refit rates from an existing summary.csv.
    Rates {
        summary: PathBuf,
        #[arg(short, long)]
        beta: f64,
    },
    /// Coercivity checks on random states and reference-solution checks.
    Check {
        #[arg(long, default_value_t = 200)]
        states: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = 0.06)]
        epsilon: f64,
    },
    /// Rate-fitting self-test on injected power laws.
    Synthetic {
        #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02,0.01")]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        beta: f64,
        /// Six exponents, one per summary column.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.6667,1,0.25,1.5,2")]
        exponents: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::InvalidGrid(_)
        | Error::NotEmbedded(_)
        | Error::WindowViolation { .. }
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn load(config: &Path) -> Result<SweepConfig, ExitCode> {
    SweepConfig::load(config).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(&e))
    };
    match cli.command {
        Command::Run { config, epsilon, output } => {
            let cfg = load(&config)?;
            let root = output.unwrap_or_else(|| cfg.output_dir());
            let case = harness::run_case(&cfg, epsilon, &root).map_err(fail)?;
            println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "t", "radius", "sharp", "E_total", "E_bulk");
            for r in &case.rows {
                let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
                println!(
                    "{:>10.5} {:>12} {:>12} {:>12.4e} {:>12.4e}",
                    r.t,
                    opt(r.radius_extracted),
                    opt(r.radius_sharp),
                    r.modified.e_total,
                    r.modified.e_bulk
                );
            }
            println!(
                "energy steps: {}, violations: {}; output in {}",
                case.energy.records.len(),
                case.energy.violations(),
                case.dir.display()
            );
        }
        Command::Sweep { config, workers, output } => {
            let mut cfg = load(&config)?;
            if let Some(w) = workers {
                cfg.sweep.workers = w;
            }
            cfg.validate().map_err(fail)?;
            let root = output.unwrap_or_else(|| cfg.output_dir());
            let (summary, _) = harness::run_sweep(&cfg, &root).map_err(fail)?;
            print!("{}", summary.table());
            if summary.failures() > 0 {
                eprintln!("error: {} case(s) failed", summary.failures());
                return Err(ExitCode::from(EXIT_SOLVER));
            }
        }
        Command::Rates { summary, beta } => {
            let s = harness::refit_summary(&summary, beta).map_err(fail)?;
            print!("{}", s.table());
        }
        Command::Check {
            states,
            seed,
            nodes,
            epsilon,
        } => {
            if !check(states, seed, nodes, epsilon).map_err(fail)? {
                return Err(ExitCode::from(EXIT_CHECK));
            }
        }
        Command::Synthetic {
            epsilons,
            beta,
            exponents,
            seed,
            output,
        } => {
            let exps: [f64; 6] = exponents.as_slice().try_into().map_err(|_| {
                eprintln!("error: expected {} exponents, got {}", SUMMARY_COLUMNS.len(), exponents.len());
                ExitCode::from(EXIT_CONFIG)
            })?;
            let s = harness::synthetic_sweep(&epsilons, beta, &exps, seed);
            if let Some(dir) = output {
                std::fs::create_dir_all(&dir).map_err(|e| fail(e.into()))?;
                harness::write_summary(&dir, &s).map_err(fail)?;
            }
            print!("{}", s.table());
            let ok = s
                .fits
                .iter()
                .zip(exps)
                .all(|(f, p)| f.fit.as_ref().is_some_and(|fit| (fit.exponent - p).abs() < 1e-9));
            println!("synthetic exponents {}", if ok { "recovered" } else { "NOT recovered" });
            if !ok {
                return Err(ExitCode::from(EXIT_CHECK));
            }
        }
    }
    Ok(())
}

fn check(states: u64, seed: u64, nodes: usize, epsilon: f64) -> nsac::Result<bool> {
    let pot = PotentialSpec::default();
    let grid = Grid::unit_square(nodes, Boundary::Periodic)?;
    let params = DiagnosticParams::new(epsilon, 0.1, pot)?;
    let sol = SharpSolution::new(
        SharpKind::ShrinkingCircle {
            center: Vec2::new(0.5, 0.5),
            r0: 0.25,
        },
        0.05,
        &pot,
        0.1,
    )?;
    let mut failures = 0;
    for k in 0..states {
        let state = random_admissible_state(&grid, seed.wrapping_add(k), epsilon, &pot);
        let report = coercivity_suite(&state, &sol, &params)?;
        if !report.unit_items_passed() {
            failures += 1;
            for item in report.items.iter().filter(|i| i.unit_constant && !i.passed) {
                println!("state {k}: {} lhs {:.3e} > rhs {:.3e}", item.name, item.lhs, item.rhs);
            }
        }
    }
    let coercive = failures == 0;
    println!(
        "{} coercivity: {} of {states} random states pass the unit-constant inequalities",
        if coercive { "PASS" } else { "FAIL" },
        states - failures
    );
    let mut motion_ok = true;
    for t in [0.0, 0.05, 0.1] {
        motion_ok &= sol.motion_law_residual(t, 64)? < 1e-12;
    }
    println!("{} motion law of the shrinking circle", if motion_ok { "PASS" } else { "FAIL" });
    Ok(coercive && motion_ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => {
            error!("exiting with failure");
            code
        }
    }
}
