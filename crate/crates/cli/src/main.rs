use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wavepacket_lab::commands::{cmd_density, cmd_pulse, cmd_snapshots, cmd_trajectory, cmd_verify};
use wavepacket_lab::config::{load, parse_time, Scenario};
use wavepacket_lab::{resolve_seed, CliError, CliResult, SEED_ENV};

#[derive(Parser, Debug)]
#[command(name = "wavepacket-lab", version, about = "Electron wave packets in an intense laser pulse")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Time for `density`: a number in a.u. or a snapshot label i..vi.
    #[arg(long, global = true)]
    time: Option<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Packet maximum and RK4 trajectory.
    Trajectory,
    /// Angles and widths at the named snapshots.
    Snapshots,
    /// 2D density slice through the packet peak.
    Density,
    /// Vector potential and its integrals.
    Pulse,
    /// Run the oracle gates.
    Verify,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let path = cli.config.ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let config = load(&path)?;
    let env_seed = std::env::var(SEED_ENV).ok();
    let seed = resolve_seed(env_seed.as_deref(), config.verify.seed)?;
    let out = cli.out.unwrap_or_else(|| config.output.directory.clone());
    let sc = Scenario::new(config, seed)?;
    let written = match cli.command {
        Command::Trajectory => cmd_trajectory(&sc, &out)?,
        Command::Snapshots => cmd_snapshots(&sc, &out)?,
        Command::Pulse => cmd_pulse(&sc, &out)?,
        Command::Density => {
            let t = match &cli.time {
                Some(s) => parse_time(s, &sc.pulse)?,
                None => sc.t_end(),
            };
            cmd_density(&sc, t, &out)?
        }
        Command::Verify => {
            let (report, path) = cmd_verify(&sc, &out)?;
            print!("{}", report.to_text());
            if !report.passed() {
                log::error!("verification gates failed; report in {}", path.display());
                return Err(CliError::GateFailure);
            }
            path
        }
    };
    log::info!("wrote {}", written.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::GateFailure) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
