mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "hybridsense", version, about = "Run, replay and analyse shared sensemaking sessions")]
struct Cli {
    /// JSON file with `serve` and `analyze` sections; flags and environment win over it.
    #[arg(long, global = true, env = "HYBRIDSENSE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Host sessions until interrupted.
    Serve(commands::ServeArgs),
    /// Write a synthetic corpus and its manifest.
    GenerateCorpus(commands::GenerateArgs),
    /// Rebuild a snapshot from an event log.
    Replay(commands::ReplayArgs),
    /// Classify a logged session.
    Analyze(commands::AnalyzeArgs),
    /// Run a scripted scenario against a server.
    Simulate(commands::SimulateArgs),
    /// Compute 2D positions for a snapshot.
    Layout(commands::LayoutArgs),
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Serve(a) => commands::serve(a, &file),
        Command::GenerateCorpus(a) => commands::generate_corpus(a),
        Command::Replay(a) => commands::replay(a),
        Command::Analyze(a) => commands::analyze(a, &file),
        Command::Simulate(a) => commands::simulate(a),
        Command::Layout(a) => commands::layout(a),
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            let line = serde_json::json!({ "error": err.code, "message": err.message });
            eprintln!("{line}");
            ExitCode::from(err.exit)
        }
    }
}
