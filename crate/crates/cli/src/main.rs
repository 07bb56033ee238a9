use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cli::{cmd_render, cmd_run_pipeline, cmd_synth_alpha, cmd_verify, CliError, Outcome, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "annulus", version, about = "Pseudo-rotation closure experiments on the annulus")]
struct Args {
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every residual tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize α and write its convergent table.
    SynthAlpha,
    /// Run the closure pipeline and write the manifest and artifacts.
    RunPipeline,
    /// Run the verification suites.
    Verify,
    /// Render a scene JSON or curve CSV to SVG.
    Render { artifact: PathBuf },
}

fn run(args: Args) -> Result<Outcome, CliError> {
    let overrides = Overrides { out: args.out.clone(), seed: args.seed, tolerance_scale: args.tolerance_scale };
    if let Command::Render { artifact } = &args.command {
        let out = args.out.clone().or_else(|| artifact.parent().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
        return cmd_render(artifact, &out);
    }
    let cfg = RunConfig::resolve(args.config.as_deref(), &overrides)?;
    match args.command {
        Command::SynthAlpha => cmd_synth_alpha(&cfg),
        Command::RunPipeline => cmd_run_pipeline(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Render { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
