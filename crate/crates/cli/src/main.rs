use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use relaymimo::scenario::Scenario;
use relaymimo::validation::{self, ValidationOptions};
use relaymimo_cli::commands::{self, Engine, RateMode};
use relaymimo_cli::output::{plot_script, Table};
use relaymimo_cli::presets;

#[derive(Parser)]
#[command(
    name = "relaymimo",
    version,
    about = "Large-system analysis of multi-hop AF relay MIMO channels"
)]
struct Cli {
    /// Master seed of every Monte Carlo run.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Built-in figure scenario (fig2 to fig8) instead of a file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Also write a matplotlib script next to `--out`.
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable rate over the sweep.
    Rate {
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RateMode::All)]
        mode: RateMode,
        #[arg(long, value_enum, default_value_t = Engine::Replica)]
        engine: Engine,
        /// Drop the 1/K half-duplex factor.
        #[arg(long)]
        no_tdma: bool,
    },
    /// Rate against source-destination distance for several hop counts.
    Distance { scenario: Option<PathBuf> },
    /// Uncoded QPSK bit error rate per detector.
    Ber {
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Engine::Both)]
        engine: Engine,
    },
    /// Acceptance suite; exits with status 1 if a criterion fails.
    Validate {
        /// Also check the fixed points of this scenario.
        scenario: Option<PathBuf>,
        /// Solver and identity checks only.
        #[arg(long)]
        quick: bool,
        /// Machine-readable report.
        #[arg(long)]
        json: bool,
    },
    /// Per-stream estimator moments against the scalar channel.
    Decoupling { scenario: Option<PathBuf> },
}

fn scenario(path: &Option<PathBuf>, preset: &Option<String>) -> Result<Scenario> {
    match (path, preset) {
        (Some(_), Some(_)) => bail!("give a scenario file or --preset, not both"),
        (Some(p), None) => Ok(Scenario::load(p)?),
        (None, Some(name)) => presets::preset(name),
        (None, None) => bail!("no scenario: pass a file or --preset"),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_table(cli: &Cli, t: &Table, x: &str, ys: &[&str], log_y: bool) -> Result<()> {
    emit(cli, &t.render()?)?;
    if cli.plot {
        let out = cli.out.as_ref().context("--plot needs --out")?;
        let ys: Vec<String> = ys.iter().map(|s| s.to_string()).collect();
        let script = plot_script(&out.to_string_lossy(), x, &ys, log_y);
        std::fs::write(out.with_extension("py"), script)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match &cli.command {
        Command::Rate {
            scenario: s,
            mode,
            engine,
            no_tdma,
        } => {
            let t = commands::rate(
                &scenario(s, &cli.preset)?,
                *mode,
                *engine,
                !no_tdma,
                cli.seed,
            )?;
            emit_table(cli, &t, "value", &["rate_bits"], false)?;
        }
        Command::Distance { scenario: s } => {
            let t = commands::distance(&scenario(s, &cli.preset)?, cli.seed)?;
            let ys: Vec<&str> = t
                .columns
                .iter()
                .filter(|c| c.starts_with("rate_k"))
                .map(String::as_str)
                .collect();
            emit_table(cli, &t, "distance", &ys, false)?;
        }
        Command::Ber {
            scenario: s,
            engine,
        } => {
            let t = commands::ber(&scenario(s, &cli.preset)?, *engine, cli.seed)?;
            emit_table(
                cli,
                &t,
                "value",
                &["replica_ber", "mc_ber", "lower_bound"],
                true,
            )?;
        }
        Command::Decoupling { scenario: s } => {
            let t = commands::decoupling(&scenario(s, &cli.preset)?, cli.seed)?;
            emit_table(cli, &t, "value", &["mse_mc", "mse_pred"], false)?;
        }
        Command::Validate {
            scenario: s,
            quick,
            json,
        } => {
            let extra = match (s, &cli.preset) {
                (None, None) => None,
                _ => Some(commands::scenario_fixed_points(&scenario(s, &cli.preset)?)?),
            };
            let mut report = validation::run(&ValidationOptions {
                seed: cli.seed,
                quick: *quick,
            });
            report.criteria.extend(extra);
            let text = if *json {
                serde_json::to_string_pretty(&report)? + "\n"
            } else {
                report.criteria.iter().map(|c| c.line() + "\n").collect()
            };
            emit(cli, &text)?;
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
