//! `qcomp` command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for failures while
//! running or writing results.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcomp::{
    run_sweep, write_rows, ChannelKind, ExperimentConfig, InterpolationScheme, OutputFormat, QcompError, RadarConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "qcomp",
    version,
    about = "Off-the-grid velocity estimation from 1-bit radar measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write one row per (scheme, channel, density) cell.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of targets per realization.
    #[arg(long)]
    k: Option<usize>,
    /// Number of samples M.
    #[arg(long)]
    m: Option<usize>,
    /// Realizations per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated grid densities N/M.
    #[arg(long, value_delimiter = ',')]
    densities: Option<Vec<f64>>,
    /// Comma-separated schemes: none, taylor1, taylor2.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Comma-separated channels: full, onebit, onebit_dither.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Physical radar parameters `f0,ts` (Hz, s) instead of a unit velocity span.
    #[arg(long, value_delimiter = ',', value_name = "F0,TS")]
    physical: Option<Vec<f64>>,
    /// Minimum target separation in resolution cells.
    #[arg(long)]
    min_separation: Option<f64>,
    /// Record per-cell wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn parse_list<T: std::str::FromStr<Err = QcompError>>(items: &[String]) -> Result<Vec<T>, Failure> {
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(|e| Failure::Config(e.to_string())))
        .collect()
}

fn build_config(args: &SweepArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    let config_err = |e: QcompError| Failure::Config(e.to_string());

    let m = args.m.unwrap_or(cfg.radar.m_samples());
    cfg.radar = match (&args.physical, args.m) {
        (Some(p), _) => match p[..] {
            [f0, ts] => RadarConfig::new(f0, ts, m).map_err(config_err)?,
            _ => return Err(Failure::Config("--physical takes exactly two values: f0,ts".into())),
        },
        (None, Some(_)) => match (cfg.radar.carrier(), cfg.radar.sampling_period(), cfg.radar.wave_speed()) {
            (Some(f0), Some(ts), Some(c)) => RadarConfig::with_speed(f0, ts, m, c).map_err(config_err)?,
            _ => RadarConfig::normalized(m).map_err(config_err)?,
        },
        (None, None) => cfg.radar,
    };
    if let Some(k) = args.k {
        cfg.k_targets = k;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(d) = &args.densities {
        cfg.densities = d.clone();
    }
    if let Some(s) = &args.schemes {
        cfg.schemes = parse_list::<InterpolationScheme>(s)?;
    }
    if let Some(c) = &args.channels {
        cfg.channels = parse_list::<ChannelKind>(c)?;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse::<OutputFormat>().map_err(config_err)?;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if args.min_separation.is_some() {
        cfg.min_separation = args.min_separation;
    }
    if args.timing {
        cfg.record_timing = true;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    let rows = run_sweep(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut buf = Vec::new();
    write_rows(&rows, cfg.format, &mut buf).map_err(|e| Failure::Runtime(e.to_string()))?;
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, &buf).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?
        }
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("qcomp: configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("qcomp: {msg}");
            ExitCode::from(2)
        }
    }
}
