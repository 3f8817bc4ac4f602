use casimir_cli::commands::{
    compare_eq, compute_pressures, epsilon_csv, poles, write_compare_csv, write_pressure_csv, write_pressure_summary,
};
use casimir_cli::verify::run_verify;
use casimir_cli::{CliError, RunConfig};
use casimir_core::em_green::Plate;
use clap::{Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "casimir", version, about = "Steady-state Casimir pressure between dissipative plates")]
struct Cli {
    /// Configuration file (`section.key = value` lines); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides `output.path`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative quadrature tolerance; overrides `options.rel_tol`.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Report the raw pressure without removing the l → ∞ baseline.
    #[arg(long, global = true)]
    no_baseline_subtract: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Left,
    Right,
}

impl From<Side> for Plate {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => Plate::L,
            Side::Right => Plate::R,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state pressure at every sweep point (CSV).
    Pressure,
    /// Permittivity of one plate on the real-frequency axis (CSV).
    Epsilon {
        #[arg(long, value_enum, default_value = "left")]
        material: Side,
        #[arg(long, default_value_t = 0.0)]
        omega_min: f64,
        #[arg(long, default_value_t = 5.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Poles of the oscillator response of one plate (JSON).
    Poles {
        #[arg(long, value_enum, default_value = "left")]
        material: Side,
    },
    /// Property suite; exits 1 if any property fails.
    Verify,
    /// Steady-state pressure next to the equilibrium Matsubara sum (CSV).
    CompareEq,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.rel_tol {
        cfg.options.rel_tol = t;
        cfg.options.validate().map_err(|e| CliError::config(None, format!("--rel-tol: {e}")))?;
    }
    if cli.no_baseline_subtract {
        cfg.options.subtract_infinite_separation = false;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

/// The CSV destination and whether it is standard output.
fn sink(cfg: &RunConfig) -> Result<(Box<dyn Write>, bool), CliError> {
    match &cfg.output {
        Some(p) => Ok((Box::new(BufWriter::new(File::create(p)?)), false)),
        None => Ok((Box::new(io::stdout().lock()), true)),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Pressure => {
            let rows = compute_pressures(&cfg)?;
            let (mut out, to_stdout) = sink(&cfg)?;
            write_pressure_csv(&mut out, &cfg, &rows)?;
            out.flush()?;
            if to_stdout {
                write_pressure_summary(&mut io::stderr(), &rows)?;
            } else {
                write_pressure_summary(&mut io::stdout(), &rows)?;
            }
        }
        Command::Epsilon { material, omega_min, omega_max, points } => {
            let (mut out, _) = sink(&cfg)?;
            epsilon_csv(&mut out, &cfg, (*material).into(), *omega_min, *omega_max, *points)?;
            out.flush()?;
        }
        Command::Poles { material } => {
            let report = poles(&cfg, (*material).into())?;
            let (mut out, _) = sink(&cfg)?;
            serde_json::to_writer_pretty(&mut out, &report).map_err(io::Error::other)?;
            writeln!(out)?;
            out.flush()?;
        }
        Command::Verify => {
            let report = run_verify(&cfg)?;
            let (mut out, _) = sink(&cfg)?;
            for c in &report.checks {
                serde_json::to_writer(&mut out, c).map_err(io::Error::other)?;
                writeln!(out)?;
            }
            out.flush()?;
            let failed = report.failures();
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAILED {}: measured {:e}, threshold {:e} ({})", c.name, c.measured, c.threshold, c.detail);
            }
            if failed > 0 {
                return Err(CliError::PropertyFailure(failed));
            }
        }
        Command::CompareEq => {
            let rows = compare_eq(&cfg)?;
            let (mut out, _) = sink(&cfg)?;
            write_compare_csv(&mut out, &cfg, &rows)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
