use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybridcast_cli::commands::{cmd_compare, cmd_ingest, cmd_run, cmd_synth, synth_spec, Pairing};
use hybridcast_cli::config::RunConfig;
use hybridcast_cli::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "hybridcast", version, about = "Monthly price forecasting with K-means, KPCA and KELM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fuse economic, search-volume and target CSVs into one panel.
    Ingest {
        #[arg(long)]
        economic: Vec<PathBuf>,
        #[arg(long)]
        gsvi: Vec<PathBuf>,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a synthetic panel with planted factor groups.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra `key=value` overrides for the synth_* config keys.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit one method and write predictions and metric records.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// A `config_echo` line copied from an earlier output.
        #[arg(long)]
        echo: Option<String>,
        /// `key=value` overrides, applied last.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Improvement-rate table over metric records.
    Compare {
        #[arg(long, default_value = "method-pairs")]
        pairing: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn apply_sets(cfg: &mut RunConfig, sets: &[String]) -> Result<()> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{s}`")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            economic,
            gsvi,
            target,
            out,
        } => {
            let s = cmd_ingest(&economic, &gsvi, &target, &out)?;
            println!("panel = {}", s.path.display());
            println!("rows = {}", s.rows);
            println!("columns = {}", s.columns);
            println!("common_dates = {}", s.common_dates);
            println!("dropped_incomplete = {}", s.dropped_incomplete);
        }
        Command::Synth { seed, set, out } => {
            let mut cfg = RunConfig::default();
            apply_sets(&mut cfg, &set)?;
            let path = cmd_synth(&synth_spec(&cfg, seed), &out)?;
            println!("panel = {}", path.display());
        }
        Command::Run {
            config,
            echo,
            set,
            out,
        } => {
            let mut cfg = RunConfig::default();
            if let Some(path) = &config {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                cfg.apply_text(&text, path)?;
            }
            if let Some(echo) = &echo {
                cfg.apply_echo(echo)?;
            }
            apply_sets(&mut cfg, &set)?;
            let r = cmd_run(&cfg, &out)?;
            let m = &r.report_raw;
            println!("label = {}", r.label);
            println!("predictions = {}", r.predictions.display());
            println!("metrics = {}", r.metrics_normalized.display());
            println!("metrics_raw = {}", r.metrics_raw.display());
            println!("mape_pct = {:.4}", m.mape);
            println!("rmse = {:.6}", m.rmse);
            println!("da_pct = {:.2}", m.da);
        }
        Command::Compare {
            pairing,
            out,
            reports,
        } => {
            let pairing: Pairing = pairing.parse()?;
            let rows = cmd_compare(&reports, pairing, &out)?;
            println!("pairs = {}", rows.len());
            println!("table = {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
