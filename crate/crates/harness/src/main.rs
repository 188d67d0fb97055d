use std::path::PathBuf;
use std::process::ExitCode;

use cbp_harness::{
    run_convergence_study, run_distribution_comparison, run_family_check, run_monotone, run_simulation, with_threads,
    Experiment, HarnessError, Outcome,
};
use clap::{Args, Parser, Subcommand};
use log::{error, info};

#[derive(Parser)]
#[command(
    name = "cbp",
    version,
    about = "Convergence studies for controlled branching processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write rescaled CBP paths and limit paths.
    Simulate(Common),
    /// Generator gap and functional deviations along k_list.
    Converge(Common),
    /// Marginal laws of the CBP against the limit.
    Compare(Common),
    /// Moment and immigration-growth checks on the control family.
    Check(Common),
    /// Complete-monotonicity test of G_k and G.
    Monotone(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` in the config; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

type Study = fn(&Experiment) -> Result<Outcome, HarnessError>;

fn run(command: Command) -> Result<(), HarnessError> {
    let (opts, study): (Common, Study) = match command {
        Command::Simulate(o) => (o, |e| run_simulation(e).map(Outcome::from)),
        Command::Converge(o) => (o, |e| run_convergence_study(e).map(Outcome::from)),
        Command::Compare(o) => (o, |e| run_distribution_comparison(e).map(Outcome::from)),
        Command::Check(o) => (o, run_family_check),
        Command::Monotone(o) => (o, run_monotone),
    };
    let level = if opts.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let exp = Experiment::load(&opts.config, opts.seed)?;
    info!("config {} (hash {})", exp.origin, exp.hash);
    let outcome = with_threads(opts.threads, || study(&exp))??;
    let out = opts.out.or_else(|| exp.config.out.clone());
    outcome.table.write(out.as_deref())?;
    if let Some(path) = &out {
        info!("wrote {} rows to {}", outcome.table.rows.len(), path.display());
    }
    match outcome.violation {
        Some(v) => Err(cbp_core::Error::InvariantViolation(v).into()),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            if !log::log_enabled!(log::Level::Error) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
