use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod error;
mod eval;
mod manifest;
mod nn;
mod stats;
mod sweep;
mod train;

use error::exit_code;

/// Train and evaluate word embeddings with word n-gram and char n-gram
/// augmented contexts.
///
/// Every flag can also be set through an environment variable named
/// `NGRAMVEC_<FLAG>` (uppercase, dashes as underscores).
#[derive(Parser)]
#[command(name = "ngramvec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train word vectors on a tokenized corpus.
    Train(Box<train::TrainArgs>),
    /// Evaluate vector files on similarity or analogy datasets.
    Eval(eval::EvalArgs),
    /// Print the nearest neighbors of a word.
    Nn(nn::NnArgs),
    /// Evaluate every checkpoint of a training run.
    Sweep(sweep::SweepArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Train(args) => train::run(*args),
        Command::Eval(args) => eval::run(args),
        Command::Nn(args) => nn::run(args),
        Command::Sweep(args) => sweep::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render_chain(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

/// Join the cause chain, skipping causes already quoted by their parent.
fn render_chain(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !prev.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
        prev = text;
    }
    out
}
