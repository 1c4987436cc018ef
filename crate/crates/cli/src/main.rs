//! `bnst`: runs the drift, tracking, comparison and BER experiments and
//! writes their CSV files.

use std::path::PathBuf;
use std::process::ExitCode;

use bnst::harness::{run_experiment, Experiment, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bnst", version, about = "Blind null-space learning and tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Null-space drift d_MI against the channel correlation lag.
    Drift(Common),
    /// One tracking trace, slot by slot.
    Track(Common),
    /// BNSL versus BNST interference percentiles over Doppler frequencies.
    Compare(Common),
    /// Symbol error rate of the superimposed data scheme against SNR.
    Ber(Common),
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Channel realisations (tracking and BER).
    #[arg(long)]
    channels: Option<usize>,
    /// Slots per tracking run.
    #[arg(long)]
    slots: Option<usize>,
    /// Full-size runs: 100 channels x 10^4 slots, 10^7 BER symbols. Explicit
    /// flags still override.
    #[arg(long)]
    paper_scale: bool,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    workers: Option<usize>,
    /// Doppler frequency in Hz for drift and track.
    #[arg(long)]
    fd: Option<f64>,
    /// Transmit antennas.
    #[arg(long)]
    nt: Option<usize>,
}

impl Common {
    fn scenario(&self) -> bnst::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if self.paper_scale {
            cfg.full_scale();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.channels {
            cfg.num_channels = c;
            cfg.ber.channels = c;
        }
        if let Some(s) = self.slots {
            cfg.num_slots = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(f) = self.fd {
            cfg.fd_hz = f;
        }
        if let Some(n) = self.nt {
            cfg.nt = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, common) = match &cli.command {
        Command::Drift(c) => (Experiment::Drift, c),
        Command::Track(c) => (Experiment::Track, c),
        Command::Compare(c) => (Experiment::Compare, c),
        Command::Ber(c) => (Experiment::Ber, c),
    };
    let result = common
        .scenario()
        .and_then(|cfg| run_experiment(exp, &cfg, &common.out));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bnst: {e}");
            ExitCode::FAILURE
        }
    }
}
