use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cellscope_cli::config::{self, ExperimentKind, Scale, ValidationError};
use cellscope_cli::{output, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cellscope", version = output::VERSION, about = "Phase-space cell OTOC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Model parameters as written in `[model]` (default).
    #[arg(long, conflicts_with = "paper_scale")]
    desk_scale: bool,
    /// Apply the `[paper_scale]` overrides.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config.
    Run(RunArgs),
    /// Run only the classical_section experiments of a config.
    ClassicalSection(RunArgs),
    QuantumSection(RunArgs),
    OtocCurve(RunArgs),
    SpreadMap(RunArgs),
    EntropyCurve(RunArgs),
    WidthCurve(RunArgs),
    Ehrenfest(RunArgs),
    LyapunovReport(RunArgs),
    /// Render a section CSV as a PPM heatmap.
    RenderHeatmap {
        section: PathBuf,
        /// Output image; defaults to the CSV path with a .ppm extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pixels per cell side.
        #[arg(long, default_value_t = 8)]
        block: usize,
    },
}

fn execute(args: RunArgs, only: Option<ExperimentKind>) -> Result<()> {
    let scale = if args.paper_scale {
        Scale::Paper
    } else {
        Scale::Desk
    };
    let config = config::load(&args.config, scale)?;
    let options = RunOptions {
        seed: args.seed,
        threads: args.threads,
        scale,
        only,
    };
    let manifest = cellscope_cli::run(&config, &options, &args.out)?;
    for f in &manifest.files {
        println!("{}", args.out.join(&f.path).display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    use ExperimentKind as K;
    match cli.command {
        Command::Run(a) => execute(a, None),
        Command::ClassicalSection(a) => execute(a, Some(K::ClassicalSection)),
        Command::QuantumSection(a) => execute(a, Some(K::QuantumSection)),
        Command::OtocCurve(a) => execute(a, Some(K::OtocCurve)),
        Command::SpreadMap(a) => execute(a, Some(K::SpreadMap)),
        Command::EntropyCurve(a) => execute(a, Some(K::EntropyCurve)),
        Command::WidthCurve(a) => execute(a, Some(K::WidthCurve)),
        Command::Ehrenfest(a) => execute(a, Some(K::Ehrenfest)),
        Command::LyapunovReport(a) => execute(a, Some(K::LyapunovReport)),
        Command::RenderHeatmap {
            section,
            out,
            block,
        } => {
            let text = std::fs::read_to_string(&section)?;
            let grid = output::read_section(&text)
                .map_err(|e| ValidationError::new(section.display().to_string(), e.to_string()))?;
            let out = out.unwrap_or_else(|| section.with_extension("ppm"));
            std::fs::write(&out, output::render_ppm(&grid, block))?;
            println!("{}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let json = match err.downcast_ref::<ValidationError>() {
                Some(v) => serde_json::json!({
                    "error": "validation",
                    "field": v.field,
                    "message": v.message,
                }),
                None => serde_json::json!({
                    "error": "runtime",
                    "message": format!("{err:#}"),
                }),
            };
            eprintln!("{json}");
            ExitCode::from(if err.is::<ValidationError>() { 2 } else { 1 })
        }
    }
}
