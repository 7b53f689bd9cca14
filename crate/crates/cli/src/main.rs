//! `seqcvae` command-line tool.

mod commands;
mod layered;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EvalArgs, PlotArgs, ReportArgs, SynthArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "seqcvae", version, about = "Sequential CVAE pedestrian trajectory forecaster")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic scenes as tsv files.
    Synth(SynthArgs),
    /// Train a model and write a checkpoint with its loss curve.
    Train(TrainArgs),
    /// Best-of-K evaluation with per-frame error curves.
    Eval(EvalArgs),
    /// Draw windows with past, truth, raw and refined predictions as SVG.
    Plot(PlotArgs),
    /// Parameter counts and inference timing per checkpoint.
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Plot(a) => commands::plot(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(layered::exit_code(&e))
        }
    }
}
