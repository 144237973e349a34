use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netssm::harness::{self, RunResult};
use netssm::{io, Overrides, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "netssm",
    version,
    about = "Track a time-varying directed graph from node signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured scenario and run every method over it.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Simulate the configured scenario and dump the trajectory.
    Generate {
        config: PathBuf,
        /// Directory for the trajectory files.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run the configured methods over a dumped trajectory.
    Replay {
        dir: PathBuf,
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    sigma_obs: Option<f64>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            threads: a.threads,
            output_dir: a.output_dir,
            horizon: a.horizon,
            sigma_obs: a.sigma_obs,
        }
    }
}

fn load(path: &Path, overrides: OverrideArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(&overrides.into());
    cfg.validate()?;
    Ok(cfg)
}

fn report(cfg: &RunConfig, result: &RunResult) {
    println!("change steps: {:?}", result.change_steps);
    for s in &result.summaries {
        let rec: Vec<String> = s
            .recovery
            .iter()
            .map(|r| r.map_or_else(|| "-".into(), |k| k.to_string()))
            .collect();
        println!(
            "{:<24} mean {:.4e}  steady {:.4e}  recovery [{}]",
            s.label,
            s.mean,
            s.steady_state_mean,
            rec.join(" ")
        );
    }
    println!("results written to {}", cfg.output_dir.display());
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, overrides } => {
            let cfg = load(&config, overrides)?;
            let result = harness::run_experiment(&cfg)?;
            report(&cfg, &result);
        }
        Command::Generate {
            config,
            out,
            overrides,
        } => {
            let cfg = load(&config, overrides)?;
            let traj = harness::build_trajectory(&cfg)?;
            io::write_trajectory(&out, &traj)?;
            println!(
                "wrote {} steps of a {}-node trajectory to {}",
                traj.horizon(),
                traj.order(),
                out.display()
            );
        }
        Command::Replay {
            dir,
            config,
            overrides,
        } => {
            let cfg = load(&config, overrides)?;
            let traj = io::read_trajectory(&dir)?;
            let result = harness::execute(&traj, &cfg)?;
            report(&cfg, &result);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error[{}]: {}",
                e.category(),
                e.to_string().replace('\n', " ")
            );
            ExitCode::FAILURE
        }
    }
}
