use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use divfund::commands::{self, DEFAULT_GRID_STEP, DEFAULT_PATHS, DEFAULT_SEED};
use divfund::config::{parse_count, Config};
use divfund::CliError;
use divfund_core::sim::{SimConfig, StrategySpec};

/// Optimal dividends with random funding: solver, verifier and simulator.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal band (a*, b*), coefficients and a verified value table.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Write solution.csv and value_table.csv here instead of printing the solution.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal levels over a grid of funding costs.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        phi_min: f64,
        #[arg(long)]
        phi_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Monte Carlo estimate of a band strategy's value.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Funding level; defaults to the optimal a*.
        #[arg(long)]
        a: Option<f64>,
        /// Dividend barrier; defaults to the optimal b*.
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        x0: f64,
        #[arg(long, value_parser = count)]
        paths: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_parser = count)]
        seed: Option<u64>,
    },
    /// Grid approximations with at most n fundings.
    Iterate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        grid_step: Option<f64>,
    },
}

fn count(text: &str) -> Result<u64, String> {
    parse_count(text).ok_or_else(|| format!("not a non-negative integer: {text}"))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

fn print(text: &str) -> Result<(), CliError> {
    std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = Config::load(&config)?;
            let res = commands::solve(&cfg.params)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                    write_file(&dir, "solution.csv", &res.solution_csv)?;
                    write_file(&dir, "value_table.csv", &res.value_csv)?;
                }
                None => print(&res.solution_csv)?,
            }
            if !res.verified {
                let r = &res.report;
                return Err(CliError::Verification(format!(
                    "max HJB violation {:e} at x = {}, concave = {}, joint gaps {:?}",
                    r.max_hjb_violation, r.worst_x, r.concave, r.joint_gaps
                )));
            }
        }
        Command::Sweep { config, phi_min, phi_max, points } => {
            let cfg = Config::load(&config)?;
            let res = commands::sweep(&cfg.params, phi_min, phi_max, points)?;
            print(&res.csv)?;
            for (phi, r) in &res.rows {
                if let Err(e) = r {
                    eprintln!("phi = {phi}: {e}");
                }
            }
            if res.failures() > 0 {
                return Err(CliError::Verification(format!("{} of {} rows failed", res.failures(), res.rows.len())));
            }
        }
        Command::Simulate { config, a, b, x0, paths, horizon, seed } => {
            let cfg = Config::load(&config)?;
            let (a, b) = match (a, b) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    let s = divfund_core::solve(&cfg.params).map_err(CliError::Solver)?;
                    (a.unwrap_or(s.a_star), b.unwrap_or(s.b_star))
                }
            };
            let strategy = StrategySpec::new(a, b).map_err(CliError::Invalid)?;
            let sim = SimConfig {
                x0,
                n_paths: paths.or(cfg.sim.paths).unwrap_or(DEFAULT_PATHS),
                horizon: horizon.or(cfg.sim.horizon).unwrap_or(SimConfig::DEFAULT_HORIZON),
                seed: seed.or(cfg.sim.seed).unwrap_or(DEFAULT_SEED),
            };
            print(&commands::simulate(&cfg.params, strategy, sim)?.csv)?;
        }
        Command::Iterate { config, n, grid_step } => {
            let cfg = Config::load(&config)?;
            let step = grid_step.or(cfg.grid_step).unwrap_or(DEFAULT_GRID_STEP);
            print(&commands::iterate(&cfg.params, n, step)?.csv)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
