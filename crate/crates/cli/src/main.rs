//! `vmfilt`: design, apply and analyze vanishing-moment filters; detect blobs.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ApplyArgs, BenchArgs, DesignArgs, DetectArgs, RespondArgs, SceneArgs};

#[derive(Debug, Parser)]
#[command(name = "vmfilt", version, about = "Vanishing-moment FIR/IIR image filters and Hessian blob detection")]
struct Cli {
    /// Worker threads (default: all available).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design a filter and write its coefficients as JSON.
    Design(DesignArgs),
    /// Filter an image separably.
    Apply(ApplyArgs),
    /// Detect blobs of one scale; detections go to stdout as JSON lines.
    Detect(DetectArgs),
    /// Frequency response (and optionally impulse response) as CSV.
    Respond(RespondArgs),
    /// Time FIR and IIR lowpass filters across scales.
    Bench(BenchArgs),
    /// Render an ellipse scene to an image.
    Scene(SceneArgs),
}

/// Failure with its exit status: 2 for bad input, 3 for numerical failure.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<vmfilt::Error> for Failure {
    fn from(e: vmfilt::Error) -> Self {
        Failure { code: if e.is_numerical() { 3 } else { 2 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Design(a) => commands::design(a),
        Command::Apply(a) => commands::apply(a),
        Command::Detect(a) => commands::detect(a),
        Command::Respond(a) => commands::respond(a),
        Command::Bench(a) => commands::bench(a, cli.threads),
        Command::Scene(a) => commands::scene(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
