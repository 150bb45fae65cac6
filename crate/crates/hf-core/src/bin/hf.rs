//! Batch CLI for the homogeneous-flow laboratory.
//!
//! Exit codes: 0 = completed, 2 = invalid config or invalid input,
//! 3 = I/O or internal failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use hf_core::analysis::llg_check;
use hf_core::config::ExperimentConfig;
use hf_core::container::{load_framing, load_gauge};
use hf_core::framing::polar_project;
use hf_core::harness::{calibration_report, run_experiment, sweep};
use hf_core::topology::degree;
use hf_core::HfError;

#[derive(Parser)]
#[command(
    name = "hf",
    version,
    about = "Numerical laboratory for the homogeneous flow on framings of the 3-sphere"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print quadrature, bracket, and degree calibration for a grid
    Calibrate {
        /// grid sizes as three comma-separated counts, e.g. 16,16,32
        #[arg(long, value_name = "A,B,C")]
        grid: String,
    },
    /// Run one experiment described by a key=value config file
    Run {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Parse every regular file in a directory as a config, run them all,
    /// and print the CSV summary
    Sweep {
        #[arg(long, value_name = "DIR")]
        configs: PathBuf,
        /// also write the CSV summary to this file
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compute the degree of a gauge-field container (projecting to
    /// rotations first when necessary)
    Degree {
        #[arg(long, value_name = "FILE")]
        field: PathBuf,
    },
    /// Lie-limit analysis of a framing container, printed as JSON
    Analyze {
        #[arg(long, value_name = "FILE")]
        framing: PathBuf,
        /// constancy tolerance for the globalizable verdict
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

fn parse_grid(text: &str) -> Result<(usize, usize, usize), HfError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(HfError::Config(format!("--grid wants three comma-separated counts, got '{text}'")));
    }
    let mut dims = [0usize; 3];
    for (d, p) in dims.iter_mut().zip(&parts) {
        *d = p
            .parse()
            .map_err(|_| HfError::Config(format!("--grid counts must be positive integers, got '{text}'")))?;
    }
    Ok((dims[0], dims[1], dims[2]))
}

fn dispatch(cli: Cli) -> Result<(), HfError> {
    match cli.cmd {
        Cmd::Calibrate { grid } => {
            let (na, nb, ng) = parse_grid(&grid)?;
            print!("{}", calibration_report(na, nb, ng)?);
        }
        Cmd::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::parse(&text)?;
            let art = run_experiment(&cfg)?;
            let main = art.main_trace();
            println!("outcome: {}", main.outcome);
            println!("converged: {}", art.convergence.converged);
            if let Some(tp) = art.convergence.t_prime {
                println!("t_prime: {tp}");
            }
            if let Some(report) = &art.report {
                println!("classification: {}", report.classification);
            }
            println!("artifact: {}", art.dir.display());
        }
        Cmd::Sweep { configs, out } => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&configs)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(HfError::Config(format!("no config files in {}", configs.display())));
            }
            let mut cfgs = Vec::with_capacity(files.len());
            for file in &files {
                let text = std::fs::read_to_string(file)?;
                cfgs.push(ExperimentConfig::parse(&text).map_err(|e| {
                    HfError::Config(format!("{}: {e}", file.display()))
                })?);
            }
            let csv = sweep(&cfgs)?;
            if let Some(path) = out {
                std::fs::write(path, &csv)?;
            }
            print!("{csv}");
        }
        Cmd::Degree { field } => {
            let a = load_gauge(&field)?;
            match degree(&a) {
                Ok((raw, rounded)) => {
                    println!("degree: raw {raw:.9} -> {rounded} (rotation field)")
                }
                Err(HfError::InvalidInput(_)) => {
                    let r = polar_project(&a)?;
                    let (raw, rounded) = degree(&r)?;
                    println!("degree: raw {raw:.9} -> {rounded} (polar-projected first)");
                }
                Err(e) => return Err(e),
            }
        }
        Cmd::Analyze { framing, tol } => {
            let w = load_framing(&framing)?;
            let report = llg_check(&w, tol)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        let code = match e {
            HfError::Config(_) | HfError::InvalidInput(_) => 2,
            _ => 3,
        };
        std::process::exit(code);
    }
}
