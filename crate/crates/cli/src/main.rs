//! `qlight`: train, evaluate, and benchmark signal controllers for a
//! single simulated intersection.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qlight",
    version,
    about = "Deep Q-learning traffic signal control at a single intersection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a Q-network controller on one traffic pattern
    Train(commands::TrainArgs),
    /// Evaluate one controller over repeated seeded episodes
    Eval(commands::EvalArgs),
    /// Benchmark the trained policy against the three baselines
    Compare(commands::CompareArgs),
    /// Cross-evaluate trained models over all traffic patterns
    Generalize(commands::GeneralizeArgs),
}

/// Failures mapped onto the process exit codes: 2 for configuration
/// problems, 3 for missing artifacts, 4 for runtime failures.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Missing(String),
    Runtime(String),
}

impl AppError {
    fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Missing(_) => 3,
            AppError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Missing(m) | AppError::Runtime(m) => m,
        }
    }
}

impl From<qlight::qnet::QnetError> for AppError {
    fn from(e: qlight::qnet::QnetError) -> Self {
        match e {
            qlight::qnet::QnetError::MissingFile(_) => AppError::Missing(e.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

impl From<qlight::harness::HarnessError> for AppError {
    fn from(e: qlight::harness::HarnessError) -> Self {
        use qlight::agent::AgentError;
        use qlight::harness::HarnessError;
        match e {
            HarnessError::Param(p) => AppError::Config(p.to_string()),
            HarnessError::Baseline(b) => AppError::Config(b.to_string()),
            HarnessError::ModelRequired | HarnessError::NoRuns => AppError::Config(e.to_string()),
            HarnessError::MissingModels(_) => AppError::Missing(e.to_string()),
            HarnessError::Qnet(q) => AppError::from(q),
            HarnessError::Agent(AgentError::Param(p)) => AppError::Config(p.to_string()),
            HarnessError::Agent(AgentError::Config(c)) => AppError::Config(c.to_string()),
            HarnessError::Agent(AgentError::Qnet(q)) => AppError::from(q),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::cmd_train(args),
        Command::Eval(args) => commands::cmd_eval(args),
        Command::Compare(args) => commands::cmd_compare(args),
        Command::Generalize(args) => commands::cmd_generalize(args),
    };
    if let Err(error) = result {
        eprintln!("error: {}", error.message());
        std::process::exit(error.exit_code());
    }
}
