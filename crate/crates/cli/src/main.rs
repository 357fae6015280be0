use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use kinwave_cli::config::{parse_dn_list, template_description, template_names};
use kinwave_cli::{load_spec_arg, runner};

/// Lead-vehicle experiments for the Lagrangian LWR discretization.
#[derive(Parser)]
#[command(name = "kinwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration (file path or template name).
    Run {
        /// Config file path or template name
        config: String,
        /// Output directory (defaults to the config's output_dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 2 if the run had collisions or negative speeds.
        #[arg(long)]
        expect_clean: bool,
    },
    /// Repeat a run over several dn values with dt/dn fixed.
    Sweep {
        /// Config file path or template name
        config: String,
        /// Comma-separated dn values; defaults to the config's sweep list.
        #[arg(long)]
        dn: Option<String>,
        /// Output directory (defaults to the config's output_dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the collision-free and CFL thresholds for the config's step sizes.
    Thresholds {
        /// Config file path or template name
        config: String,
    },
    /// Run the string-stability experiment of a config with a [stability] section.
    Stability {
        /// Config file path or template name
        config: String,
        /// Also write stability.csv and stability.txt into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled templates.
    Templates,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            config,
            out,
            expect_clean,
        } => {
            let spec = load_spec_arg(&config)?;
            let dir = out.unwrap_or_else(|| spec.output_dir.clone());
            let outcome = runner::run(&spec, &dir)?;
            print!("{}", runner::summary(&spec, &outcome));
            if expect_clean && !outcome.is_clean() {
                eprintln!(
                    "run not clean: {} collisions, {} negative speeds",
                    outcome.diagnostics.collision_count, outcome.diagnostics.negative_speed_count
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Sweep { config, dn, out } => {
            let spec = load_spec_arg(&config)?;
            let dns = match dn {
                Some(list) => parse_dn_list(&list).map_err(|m| anyhow::anyhow!("--dn: {m}"))?,
                None => spec
                    .sweep
                    .clone()
                    .ok_or_else(|| anyhow::anyhow!("no --dn list and no run.sweep in config"))?,
            };
            let dir = out.unwrap_or_else(|| spec.output_dir.clone());
            let rows = runner::sweep(&spec, &dns, &dir)?;
            print!("{}", runner::sweep_csv(&rows));
        }
        Command::Thresholds { config } => {
            let spec = load_spec_arg(&config)?;
            print!("{}", runner::thresholds_report(&spec)?);
        }
        Command::Stability { config, out } => {
            let spec = load_spec_arg(&config)?;
            let result = runner::stability(&spec)?;
            if let Some(dir) = out {
                runner::write_stability(&result, &dir)?;
            }
            print!("{}", runner::stability_report(&result));
        }
        Command::Templates => {
            for name in template_names() {
                println!("{name:<26} {}", template_description(name).unwrap_or_default());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
