use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nsreg_cli::commands::{self, Outcome};
use nsreg_cli::config::Overrides;
use nsreg_cli::CliError;

/// Numerical checks for localized Navier-Stokes regularity estimates.
///
/// Exit codes: 0 success, 1 internal error, 2 invalid input, 3 a check failed
/// or an iteration did not converge.
#[derive(Parser)]
#[command(name = "nsreg", version)]
struct Cli {
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of grid nodes per axis.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Override the number of time steps.
    #[arg(long, global = true)]
    time_steps: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment configuration (TOML, or JSON by extension); defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Hypothesis norms of the configured flow.
    Norms(ConfigArg),
    /// Localize the configured flow and audit the forcing supports.
    Localize(ConfigArg),
    /// Localized fixed-point iteration.
    #[command(subcommand)]
    Picard(PicardCmd),
    /// Exact exponent conditions.
    #[command(subcommand)]
    Ledger(LedgerCmd),
    /// Kernel estimates.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Test flows.
    #[command(subcommand)]
    Flows(FlowsCmd),
    /// Weak and very weak residuals.
    #[command(subcommand)]
    Residual(ResidualCmd),
}

#[derive(Subcommand)]
enum PicardCmd {
    /// Solve the localized fixed-point problem.
    Run(ConfigArg),
    /// Scan amplitudes for the contraction threshold.
    Scan(ConfigArg),
}

#[derive(Subcommand)]
enum LedgerCmd {
    /// Integrability bootstrap schedule for a subcritical pair.
    Bootstrap {
        #[arg(long)]
        q: String,
        #[arg(long)]
        s: String,
    },
    /// Pressure time-exponent threshold.
    Mcond {
        #[arg(long)]
        q: String,
        #[arg(long)]
        m: String,
    },
    /// Step-1 exponent system for a critical pair.
    Step1 {
        #[arg(long)]
        q: String,
        #[arg(long)]
        s: String,
        #[arg(long)]
        m: String,
        #[arg(long, default_value = "0")]
        delta: String,
    },
    /// Classify a pair against `3/q + 2/s = 1`.
    Classify {
        #[arg(long)]
        q: String,
        #[arg(long)]
        s: String,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Oseen-tensor decay constants.
    Check(ConfigArg),
}

#[derive(Subcommand)]
enum FlowsCmd {
    /// Sample the configured flow to snapshots.
    Sample(ConfigArg),
}

#[derive(Subcommand)]
enum ResidualCmd {
    /// Residual of the configured flow against the test battery.
    Check(ConfigArg),
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let overrides = Overrides { seed: cli.seed, grid_n: cli.grid_n, time_steps: cli.time_steps };
    let load = |a: &ConfigArg| {
        let mut cfg = commands::load_config(a.config.as_deref())?;
        cfg.apply(overrides)?;
        Ok::<_, CliError>(cfg)
    };
    match &cli.command {
        Command::Norms(a) => commands::norms(&load(a)?),
        Command::Localize(a) => commands::localize_cmd(&load(a)?),
        Command::Picard(PicardCmd::Run(a)) => commands::picard_run(&load(a)?),
        Command::Picard(PicardCmd::Scan(a)) => commands::picard_scan(&load(a)?),
        Command::Kernel(KernelCmd::Check(a)) => commands::kernel_check(&load(a)?),
        Command::Flows(FlowsCmd::Sample(a)) => commands::flows_sample(&load(a)?),
        Command::Residual(ResidualCmd::Check(a)) => commands::residual_check(&load(a)?),
        Command::Ledger(l) => match l {
            LedgerCmd::Bootstrap { q, s } => commands::ledger_bootstrap(q, s),
            LedgerCmd::Mcond { q, m } => commands::ledger_mcond(q, m),
            LedgerCmd::Step1 { q, s, m, delta } => commands::ledger_step1(q, s, m, delta),
            LedgerCmd::Classify { q, s } => commands::ledger_classify(q, s),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            println!("report: {}", out.dir.join("report.json").display());
            if out.report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
