use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tunnel_cli::config::{parse_ladder, parse_list};
use tunnel_cli::{run, CliError, Command, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "tunneltime",
    version,
    about = "Tunnelling widths, wave-packet snapshots and the Larmor clock"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of sweep points.
    #[arg(long, global = true, value_name = "N")]
    points: Option<usize>,
    /// Upper end of the E/V0 sweep.
    #[arg(long, global = true, value_name = "X")]
    emax: Option<f64>,
    /// Comma-separated snapshot times in ps.
    #[arg(long, global = true, value_name = "t1,t2,...", allow_hyphen_values = true)]
    snapshot_times: Option<String>,
    /// Comma-separated omega_L ladder in 1/ps; `w/N` divides the first rung.
    #[arg(long, global = true, value_name = "w,w/2,w/4")]
    omega_ladder: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Width ratios against E/V0.
    Sweep,
    /// Wave-packet snapshots and a JSON summary.
    Packet,
    /// Larmor-clock ladder report.
    Larmor,
    /// Width ratios at the transmission resonances.
    Resonance,
    /// k -> 0 limits of the width ratios.
    Limits,
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = RunConfig::load(&path)?;
    let overrides = Overrides {
        out: cli.out,
        points: cli.points,
        emax: cli.emax,
        snapshot_times: cli.snapshot_times.as_deref().map(parse_list).transpose()?,
        omega_ladder: cli.omega_ladder.as_deref().map(parse_ladder).transpose()?,
    };
    let cmd = match cli.command {
        Cmd::Sweep => Command::Sweep,
        Cmd::Packet => Command::Packet,
        Cmd::Larmor => Command::Larmor,
        Cmd::Resonance => Command::Resonance,
        Cmd::Limits => Command::Limits,
    };
    run(cmd, cfg, &overrides)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tunneltime: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
