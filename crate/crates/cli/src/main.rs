//! `usris`: run surface-beamforming experiments from a config file and write CSV tables.

mod config;
mod output;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use usris::beamformer::OptimizeConfig;

use crate::config::Config;
use crate::output::{config_hash, write_table, RunInfo};

#[derive(Parser, Debug)]
#[command(name = "usris", version, about = "Multi-layer surface uplink beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the optimizer seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the CSV outputs; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the number of random restarts from the config.
    #[arg(long, global = true)]
    restarts: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Detection SNR against the transmit power budget.
    SnrSweep,
    /// SNR after every alternating sweep.
    Converge,
    /// Per-element incident power and activation ratios.
    PowerDist,
    /// Azimuth radiation pattern leaving each layer.
    Pattern,
    /// Amplitude bound and zero construction for one second-layer element.
    Lemma1,
    /// Per-user SINR and sum rate under one shared combiner.
    SinrEval,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SnrSweep => "snr-sweep",
            Command::Converge => "converge",
            Command::PowerDist => "power-dist",
            Command::Pattern => "pattern",
            Command::Lemma1 => "lemma1",
            Command::SinrEval => "sinr-eval",
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let cfg = Config::parse(&text)?;

    let opt = OptimizeConfig {
        tolerance: cfg.optimizer.tolerance,
        max_iters: cfg.optimizer.max_iters,
        seed: cli.seed.unwrap_or(cfg.optimizer.seed),
        restarts: cli.restarts.unwrap_or(cfg.optimizer.restarts),
    };
    anyhow::ensure!(opt.restarts >= 1, "--restarts must be at least 1");

    let tables = match cli.command {
        Command::SnrSweep => run::snr_sweep(&cfg, &opt)?,
        Command::Converge => run::converge(&cfg, &opt)?,
        Command::PowerDist => run::power_dist(&cfg, &opt)?,
        Command::Pattern => run::pattern(&cfg, &opt)?,
        Command::Lemma1 => run::lemma1(&cfg, opt.seed)?,
        Command::SinrEval => run::sinr(&cfg, &opt)?,
    };

    std::fs::create_dir_all(&cli.out)?;
    let info = RunInfo {
        command: cli.command.name(),
        config_sha256: config_hash(&text),
        seed: opt.seed,
        restarts: opt.restarts,
    };
    for t in &tables {
        let p = write_table(&cli.out, &info, t)?;
        println!("{}", p.display());
    }
    Ok(())
}
