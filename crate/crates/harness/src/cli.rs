//! The `masim` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::{self, Category};
use crate::config::{resolve, ExperimentConfig, SeedSpec};
use crate::error::{HarnessError, Result};
use crate::runner::run_experiment;
use crate::table::Format;

#[derive(Debug, Parser)]
#[command(name = "masim", version, about = "Movable-antenna experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a channel synthesis experiment.
    Simulate(RunArgs),
    /// Run a placement optimization experiment.
    Optimize(RunArgs),
    /// Run an array sensing experiment.
    Sense(RunArgs),
    /// Run a channel estimation experiment.
    Estimate(RunArgs),
    /// Run any catalog experiment.
    Experiment(RunArgs),
    /// Check a config and print its id and hash without running it.
    ValidateConfig(ConfigArg),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output file; defaults to the config's `out`, then standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the config's seeds with the same number of consecutive seeds
    /// starting here.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; `MA_WORKERS` caps this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 I/O failure, 2 config error, 3
/// infeasible problem.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("masim: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => run(a, Some(Category::Simulate)),
        Command::Optimize(a) => run(a, Some(Category::Optimize)),
        Command::Sense(a) => run(a, Some(Category::Sense)),
        Command::Estimate(a) => run(a, Some(Category::Estimate)),
        Command::Experiment(a) => run(a, None),
        Command::ValidateConfig(a) => {
            let resolved = resolve(&ExperimentConfig::from_file(&a.config)?)?;
            println!("{} {}", resolved.experiment, resolved.hash());
            Ok(())
        }
    }
}

fn run(args: RunArgs, category: Option<Category>) -> Result<()> {
    let mut config = ExperimentConfig::from_file(&args.config.config)?;
    if let Some(entry) = catalog::find(&config.experiment) {
        let info = entry.info();
        if let Some(c) = category {
            if info.category != c {
                return Err(HarnessError::Config(format!(
                    "experiment {} belongs to `{}`, not `{}`",
                    info.id,
                    info.category.as_str(),
                    c.as_str()
                )));
            }
        }
        if let Some(start) = args.seed {
            let count = config.seeds.as_ref().map_or(info.default_trials, |s| s.to_list().len());
            config.seeds = Some(SeedSpec::Range { start, count });
        }
    }
    let resolved = resolve(&config)?;
    let table = run_experiment(&resolved, args.workers)?;
    let out = args.out.or(resolved.out.clone());
    let format = match (args.format, &out) {
        (Some(FormatArg::Csv), _) => Format::Csv,
        (Some(FormatArg::Json), _) => Format::Json,
        (None, Some(p)) => Format::from_path(p),
        (None, None) => Format::Csv,
    };
    match out {
        Some(path) => {
            table.save(&path, format)?;
            eprintln!("masim: wrote {} rows to {} (config {})", table.rows.len(), path.display(), table.metadata.config_hash);
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock, format)?;
            lock.flush()?;
        }
    }
    Ok(())
}
