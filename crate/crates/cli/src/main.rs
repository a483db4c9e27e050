//! `telelab` command-line front end.
//!
//! Every subcommand prints a JSON `CommandResult` (the sweep table is CSV).
//! Exit codes: 0 success, 2 invalid input, 3 semantic failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::CliError;

#[derive(Parser, Debug)]
#[command(name = "telelab", version, about = "Teleportation and resource-protocol verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the channel comes from: a JSON file or the built-in depolarizing family.
#[derive(Args, Debug, Clone)]
pub struct ChannelSource {
    /// Channel file (`{"dim", "kraus"}`).
    #[arg(long = "channel", value_name = "FILE", conflicts_with = "depolarizing")]
    pub file: Option<PathBuf>,
    /// Use the depolarizing channel with this probability instead of a file.
    #[arg(long, value_name = "P")]
    pub depolarizing: Option<f64>,
    /// Dimension of the generated depolarizing channel.
    #[arg(long, default_value_t = 2, requires = "depolarizing")]
    pub dim: usize,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Relative eigenvalue cutoff for rank decisions.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Choi spectrum, rank and trace-preservation residuals of a channel.
    ChannelInfo {
        #[command(flatten)]
        channel: ChannelSource,
        #[command(flatten)]
        common: Common,
    },
    /// Teleport a state through a channel and report the fidelity.
    Teleport {
        #[command(flatten)]
        channel: ChannelSource,
        /// Input state file (`{"dim", "rho"}`).
        #[arg(long, value_name = "FILE", conflicts_with = "random", required_unless_present = "random")]
        state: Option<PathBuf>,
        /// Draw a random mixed input state from this seed.
        #[arg(long, value_name = "SEED")]
        random: Option<u64>,
        /// Schmidt coefficients of the shared state (default: maximally entangled).
        #[arg(long, num_args = 1.., value_name = "MU")]
        mu: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a protocol file for determinism and faithfulness on a channel.
    ProtocolVerify {
        /// Protocol file (`{"N", "P", "M", "mu", "sender", "receiver"}`).
        protocol: PathBuf,
        #[command(flatten)]
        channel: ChannelSource,
        #[command(flatten)]
        common: Common,
    },
    /// Search for the protocol with the highest entanglement fidelity.
    Optimize {
        #[command(flatten)]
        channel: ChannelSource,
        /// Experiment configuration file.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Overrides the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-restart best-so-far traces as CSV.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Best fidelity as a function of the entanglement angle θ, μ = (cos θ, sin θ).
    Sweep {
        #[command(flatten)]
        channel: ChannelSource,
        /// Angles in radians, each within [0, π/2]; space- or comma-separated.
        #[arg(long, num_args = 1.., required = true, value_name = "THETA", value_delimiter = ',', allow_negative_numbers = true)]
        theta_grid: Vec<f64>,
        /// Experiment configuration file.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Overrides the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ChannelInfo { channel, common } => commands::channel_info(&channel, &common),
        Command::Teleport {
            channel,
            state,
            random,
            mu,
            common,
        } => commands::teleport(&channel, state.as_deref(), random, mu, &common),
        Command::ProtocolVerify { protocol, channel, common } => commands::protocol_verify(&protocol, &channel, &common),
        Command::Optimize {
            channel,
            config,
            seed,
            trace,
            common,
        } => commands::optimize(&channel, &config, seed, trace.as_deref(), &common),
        Command::Sweep {
            channel,
            theta_grid,
            config,
            seed,
            common,
        } => commands::sweep(&channel, &theta_grid, &config, seed, &common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
