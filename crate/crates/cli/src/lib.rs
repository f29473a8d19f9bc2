//! Command-line front end: study configuration, level sweeps and report
//! files.

pub mod config;
pub mod study;

use clap::Parser;
use config::{ConfigError, Mode, StudyConfig};
use std::path::PathBuf;
use std::process::ExitCode;
use study::{run_study, StudyError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fdcg", version, about = "Moving-domain advection-diffusion solver and convergence harness")]
pub struct Args {
    /// Study configuration (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the `mode` key.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Overrides the `out` key.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: ConfigError| e.to_string())
}

/// Parses the configuration and runs the study; returns the process exit
/// code. Diagnostics go to standard error.
pub fn execute(args: &Args) -> u8 {
    let mut cfg = match StudyConfig::from_path(&args.config, args.mode) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // Fails only if a global pool already exists, as in repeated calls
        // from tests; the existing pool is then kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if cfg.mode == Mode::Validate {
        print!("{}", cfg.to_config_string());
        return EXIT_OK;
    }
    match run_study(&cfg) {
        Ok(out) => {
            for row in &out.rates {
                let rate = row.rate.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into());
                println!("h = {:<10} tau = {:<10} eN = {:.3e}  rate = {rate}", row.h, row.tau, row.e_n);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                StudyError::Config(_) | StudyError::Output { .. } => EXIT_CONFIG,
                StudyError::Numerical { .. } => EXIT_NUMERICAL,
            }
        }
    }
}

pub fn main_with(args: impl IntoIterator<Item = String>) -> ExitCode {
    match Args::try_parse_from(args) {
        Ok(a) => ExitCode::from(execute(&a)),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK })
        }
    }
}
