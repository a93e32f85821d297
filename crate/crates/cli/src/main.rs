use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use genbound::{emit_curve, run, CliError, Command, ExperimentConfig, Format, Report};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Rademacher,
    Deviation,
    Symmetrize,
    Tail,
    Linear,
    Dudley,
    Suite,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Rademacher => Command::Rademacher,
            Cmd::Deviation => Command::Deviation,
            Cmd::Symmetrize => Command::Symmetrize,
            Cmd::Tail => Command::Tail,
            Cmd::Linear => Command::Linear,
            Cmd::Dudley => Command::Dudley,
            Cmd::Suite => Command::Suite,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

/// Verify generalization bounds on finite function classes.
///
/// Exit status: 0 when every checked inequality holds, 2 when one fails
/// (the report is still written), 1 on usage or configuration errors.
#[derive(Debug, Parser)]
#[command(name = "genbound", version)]
struct Args {
    command: Cmd,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Seed for every randomized path; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (affects wall time only).
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: Args) -> Result<Report, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    let command = Command::from(args.command);
    if config.command != command {
        return Err(CliError::Config(format!(
            "config describes a {} run, not {}",
            config.command.name(),
            command.name()
        )));
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    let report = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?
            .install(|| run(&config))?,
        None => run(&config)?,
    };
    let format = match args.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => config.format(),
    };
    let body = match format {
        Format::Json => report.to_json(),
        Format::Csv => emit_curve(std::slice::from_ref(&report))?,
    };
    match args.out.or_else(|| config.output.clone()) {
        Some(path) => std::fs::write(&path, body)?,
        None => print!("{body}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    // clap's own usage-error status (2) would collide with "inequality violated"
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(args) {
        Ok(report) => {
            for v in &report.violations {
                eprintln!("violation: {} (lhs {:?}, rhs {:?})", v.what, v.lhs, v.rhs);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("genbound: {e}");
            ExitCode::from(1)
        }
    }
}
