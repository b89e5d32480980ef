//! Experiment harness: dataset generation, augmentation, training and
//! evaluation, margin profiles, exact scenarios, decision-region figures and
//! the full augmentation sweep. Every command is a function of its resolved
//! [`config::ExperimentConfig`] and input files.

pub mod commands;
pub mod config;
pub mod render;
pub mod sweep;

use clap::{Parser, Subcommand};

use crate::commands::CommandOutput;
use crate::config::{ExperimentConfig, Flags};

#[derive(Debug, Parser)]
#[command(
    name = "adaptrobust",
    version,
    about = "Locally adaptive robustness experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic shape and write full, train and test CSVs
    Generate(Flags),
    /// Expand a dataset with fixed-radius or adaptive balls
    Augment(Flags),
    /// Train an MLP or build a 1-NN and report its test losses
    Train(Flags),
    /// Estimate a margin profile, its inverse and the 1-NN sample bound
    Margin(Flags),
    /// Run an exact counterexample scenario
    Scenario {
        /// two_point, four_point, two_rectangles or separable_line
        #[arg(id = "scenario", value_name = "SCENARIO")]
        scenario: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Draw the decision regions of a 2-D model
    Render(Flags),
    /// Train on every shape, seed and augmentation and tabulate the losses
    Sweep(Flags),
}

pub fn run(command: &Command) -> anyhow::Result<CommandOutput> {
    match command {
        Command::Generate(f) => {
            commands::cmd_generate(&mut ExperimentConfig::resolve("generate", f)?)
        }
        Command::Augment(f) => commands::cmd_augment(&mut ExperimentConfig::resolve("augment", f)?),
        Command::Train(f) => commands::cmd_train(&mut ExperimentConfig::resolve("train", f)?),
        Command::Margin(f) => commands::cmd_margin(&mut ExperimentConfig::resolve("margin", f)?),
        Command::Scenario { scenario, flags } => {
            commands::cmd_scenario(&mut ExperimentConfig::resolve("scenario", flags)?, scenario)
        }
        Command::Render(f) => commands::cmd_render(&mut ExperimentConfig::resolve("render", f)?),
        Command::Sweep(f) => sweep::cmd_sweep(&mut ExperimentConfig::resolve("sweep", f)?),
    }
}
