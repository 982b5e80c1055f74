use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use truwb::commands::{self, Overrides, DEMO_SEED};
use truwb::sweep::{self, SweepGrid};
use truwb::{CliError, CliResult};
use truwb_core::RunConfig;

#[derive(Parser)]
#[command(name = "truwb", version, about = "Time-reversal UWB link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run config (a sweep grid for `sweep`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Channel preset name (`co_polar`, `cross_polar`) or trace file path.
    #[arg(long, global = true)]
    channel: Option<String>,
    /// Suppress the stdout summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sound the channel and save the averaged record.
    Sound,
    /// Build the pre-filter from a saved record and measure the TR channel.
    Tr {
        /// Sounding record; defaults to `<out>/sounding.truw`.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Evaluate a parameter grid into `<out>/sweep.csv`.
    Sweep {
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run both polarisation presets and compare them.
    DemoPaper,
    /// Config file helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Write the default config with every field explicit.
    Init,
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        config: c.config.clone(),
        seed: c.seed,
        out: c.out.clone(),
        channel: c.channel.clone(),
    }
}

fn execute(cli: Cli) -> CliResult<String> {
    let ov = overrides(&cli.common);
    match cli.command {
        Command::Sound => {
            let cfg = ov.resolve()?;
            let s = commands::cmd_sound(&cfg)?;
            Ok(format!(
                "sounded {} (seed {}): effective length {:.3} ns, rms delay spread {:.3} ns -> {}",
                cfg.channel.label(),
                cfg.seed,
                s.effective_length_s * 1e9,
                s.rms_delay_spread_s * 1e9,
                cfg.output_dir.display()
            ))
        }
        Command::Tr { record } => {
            let cfg = ov.resolve()?;
            let t = commands::cmd_tr(&cfg, record.as_deref())?;
            Ok(t.report.to_key_value().trim_end().to_string())
        }
        Command::Sweep { threads } => {
            let path = ov
                .config
                .as_ref()
                .ok_or_else(|| CliError::Config("sweep needs --config <grid.json>".into()))?;
            let mut grid = SweepGrid::load(path)?;
            let grid_ov = Overrides { config: None, ..ov.clone() };
            grid_ov.apply(&mut grid.base);
            grid.base.validate()?;
            let rows = sweep::cmd_sweep(&grid, &grid.base.output_dir, threads)?;
            Ok(format!("{rows} rows -> {}", grid.base.output_dir.join("sweep.csv").display()))
        }
        Command::DemoPaper => {
            let mut cfg = match &ov.config {
                Some(path) => truwb::output::load_config(path)?,
                None => RunConfig {
                    seed: DEMO_SEED,
                    ..RunConfig::default()
                },
            };
            // both presets are always run, so a channel override is ignored
            let demo_ov = Overrides { channel: None, ..ov.clone() };
            demo_ov.apply(&mut cfg);
            cfg.validate()?;
            let d = commands::cmd_demo_paper(&cfg)?;
            Ok(d.text.trim_end().to_string())
        }
        Command::Config { action: ConfigAction::Init } => {
            let mut cfg = RunConfig::default();
            ov.apply(&mut cfg);
            let path = commands::cmd_config_init(&cfg)?;
            Ok(format!("wrote {}", path.display()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let quiet = cli.common.quiet;
    match execute(cli) {
        Ok(msg) => {
            if !quiet {
                println!("{msg}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("truwb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
