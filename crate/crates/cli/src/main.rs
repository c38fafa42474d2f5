use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homvis_cli::{commands, CliError, ExperimentConfig, Format};

#[derive(Parser)]
#[command(
    name = "homvis",
    version,
    about = "Hong-Ou-Mandel visibility with weak coherent pulses and gated detectors"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON); defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form coincidence, singles and visibility.
    Visibility,
    /// Table over the configured sweep axis.
    Sweep,
    /// Monte Carlo run of the configured experiment.
    Simulate {
        /// Also write the run's time-tag stream.
        #[arg(long)]
        timetags: Option<PathBuf>,
        /// Also write detector C's interval histogram (CSV).
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Fit after-pulse parameters to an interval histogram (CSV).
    FitAfterpulse { histogram: PathBuf },
    /// Coincidence statistics of a time-tag file.
    AnalyzeTimetags { timetags: PathBuf },
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>, CliError> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let report = match &cli.command {
        Command::Visibility => commands::run_visibility(&cfg, c.format)?,
        Command::Sweep => commands::run_sweep(&cfg, c.format)?,
        Command::Simulate {
            timetags,
            histogram,
        } => commands::run_simulate(&cfg, c.format, timetags.as_deref(), histogram.as_deref())?,
        Command::FitAfterpulse { histogram } => {
            let text = std::fs::read_to_string(histogram)
                .map_err(|e| CliError::Io(format!("{}: {e}", histogram.display())))?;
            commands::run_fit(&text, c.format)?
        }
        Command::AnalyzeTimetags { timetags } => {
            commands::run_analyze(open(timetags)?, &cfg, c.format)?
        }
    };
    match c.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => commands::write_file(path, &report),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(report.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
