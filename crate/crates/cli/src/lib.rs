//! Pipeline stages behind the `didactic` binary. Each stage reads the
//! artifacts of earlier stages under the output root, verifies them against
//! their stage manifests, and writes its own directory.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod stage;

pub use args::{Cli, Command};
pub use config::PipelineConfig;
pub use error::CliError;

/// Runs one subcommand and returns its human-readable summary.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Label(a) => commands::label(&a),
        Command::Split(a) => commands::split_cmd(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::TrainText(a) => commands::train_text(&a),
        Command::TrainMtl(a) => commands::train_mtl_cmd(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Curve(a) => commands::curve(&a),
        Command::Report(a) => commands::report(&a),
    }
}
