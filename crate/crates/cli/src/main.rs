use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quadseg::Execution;
use quadseg_cli::commands::{
    cmd_eval_seg, cmd_gda_eval, cmd_gda_project, cmd_gda_train, cmd_phantom, cmd_segment,
    EvalSegArgs, GdaEvalArgs, GdaProjectArgs, GdaTrainArgs, PhantomArgs, SegmentArgs,
};
use quadseg_cli::CliError;

#[derive(Parser)]
#[command(
    name = "quadseg",
    version,
    about = "Quadtree adaptive thresholding and kernel GDA"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic image and its ground-truth mask.
    Phantom(PhantomArgs),
    /// Segment an image with per-subdomain thresholds.
    Segment(SegmentArgs),
    /// Compare a mask with ground truth.
    EvalSeg(EvalSegArgs),
    /// Train a kernel GDA model from a labeled CSV.
    GdaTrain(GdaTrainArgs),
    /// Project samples onto a model's discriminants.
    GdaProject(GdaProjectArgs),
    /// Nearest-class-mean accuracy of a model on labeled samples.
    GdaEval(GdaEvalArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &cli.command {
        Command::Phantom(a) => cmd_phantom(a),
        Command::Segment(a) => cmd_segment(a, exec),
        Command::EvalSeg(a) => cmd_eval_seg(a),
        Command::GdaTrain(a) => cmd_gda_train(a, exec),
        Command::GdaProject(a) => cmd_gda_project(a, exec),
        Command::GdaEval(a) => cmd_gda_eval(a, exec),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: Usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::FAILURE
        }
    }
}
