use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ris_experiment::{builtin, run, ExperimentSpec, Result, Scale, BUILTINS};

#[derive(Parser)]
#[command(name = "ris-experiment", version, about = "Rate studies for RIS-aided massive MIMO uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file or a built-in experiment.
    Run {
        /// Experiment file (.toml or .json).
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        spec: Option<PathBuf>,
        /// Name of a built-in experiment (see `list`).
        #[arg(long)]
        builtin: Option<String>,
        /// Size of a built-in experiment: desk or paper.
        #[arg(long, default_value = "desk", requires = "builtin")]
        scale: String,
        /// Overrides the seed from the experiment.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the experiment's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment file without running it.
    Validate { spec: PathBuf },
    /// List built-in experiments.
    List,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            spec,
            builtin: name,
            scale,
            seed,
            out,
        } => {
            let mut spec = match (spec, name) {
                (Some(path), _) => ExperimentSpec::from_path(&path)?,
                (None, Some(name)) => builtin(&name, scale.parse::<Scale>()?)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let dir = out.or_else(|| spec.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let (outputs, summary) = run(&spec, &dir)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: {} points, {} rows in {:.1} s -> {}, {}",
                summary.name,
                summary.points,
                summary.rows,
                summary.wall_time_s,
                outputs.csv.display(),
                outputs.json.display()
            );
        }
        Command::Validate { spec } => {
            let parsed = ExperimentSpec::from_path(&spec)?;
            let points = parsed.validate()?;
            println!("{}: valid, {} sweep points", parsed.name, points.len());
        }
        Command::List => {
            for (name, description) in BUILTINS {
                println!("{name:<22} {description}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
