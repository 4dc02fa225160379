use std::io::{self, Write};
use std::process::ExitCode;

use causal_tree::commands::{
    cmd_correlate, cmd_decompose, cmd_score, cmd_stats, cmd_sweep, cmd_validate, CorrelateArgs,
    DecomposeArgs, ScoreArgs, StatsArgs, SweepArgs, ValidateArgs,
};
use clap::{Parser, Subcommand};

/// Parse, decompose and score causal-tree summaries of medical case reports.
#[derive(Debug, Parser)]
#[command(name = "causal-tree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every tree in a corpus and list errors and warnings
    Validate(ValidateArgs),
    /// Export the relation triplets of every tree
    Decompose(DecomposeArgs),
    /// Score predicted trees against gold trees
    Score(ScoreArgs),
    /// Count cases, nodes, roots and triplets
    Stats(StatsArgs),
    /// Correlate per-case scores with manual scores
    Correlate(CorrelateArgs),
    /// Correlation of every weighting method and C against manual scores
    Sweep(SweepArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut err = io::stderr().lock();
    let result = match &cli.command {
        Command::Validate(args) => cmd_validate(args, &mut out, &mut err),
        Command::Decompose(args) => cmd_decompose(args, &mut out, &mut err),
        Command::Score(args) => cmd_score(args, &mut out, &mut err),
        Command::Stats(args) => cmd_stats(args, &mut out, &mut err),
        Command::Correlate(args) => cmd_correlate(args, &mut out, &mut err),
        Command::Sweep(args) => cmd_sweep(args, &mut out, &mut err),
    };
    let flushed = out.flush();
    match result {
        Ok(code) if flushed.is_ok() => ExitCode::from(code),
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
