use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weakmeter::config::parse_config;
use weakmeter::runner::{
    run_distribution, run_extrema, run_sweep, write_distribution_csv, write_extrema_csv,
    write_sweep_csv,
};
use weakmeter::Result;

#[derive(Parser)]
#[command(name = "weakmeter", version, about = "Pre/postselected weak-measurement scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (INI-style sections).
    #[arg(long)]
    config: PathBuf,

    /// Override a config entry, e.g. --set coupling.lambda=0.04.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads for sweep evaluation.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Interpret configured angles in degrees instead of radians.
    #[arg(long)]
    degrees: bool,

    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a variable and tabulate exact and weak-limit statistics.
    Sweep(CommonArgs),
    /// Emit the conditional pointer distribution over the grid.
    Distribution(CommonArgs),
    /// Report extrema of the average and the spread.
    Extrema(CommonArgs),
    /// Sweep plus approximation-error columns.
    Compare(CommonArgs),
}

fn run(command: &Command) -> Result<()> {
    let (args, kind) = match command {
        Command::Sweep(a) => (a, "sweep"),
        Command::Distribution(a) => (a, "distribution"),
        Command::Extrema(a) => (a, "extrema"),
        Command::Compare(a) => (a, "compare"),
    };
    let text = fs::read_to_string(&args.config)?;
    let config = parse_config(&text, &args.set, args.degrees)?;

    let mut buffer: Vec<u8> = Vec::new();
    match kind {
        "sweep" => write_sweep_csv(&run_sweep(&config, args.jobs)?, false, &mut buffer)?,
        "compare" => write_sweep_csv(&run_sweep(&config, args.jobs)?, true, &mut buffer)?,
        "distribution" => write_distribution_csv(&run_distribution(&config)?, &mut buffer)?,
        "extrema" => write_extrema_csv(&run_extrema(&config)?, &mut buffer)?,
        _ => unreachable!(),
    }
    match &args.out {
        Some(path) => fs::write(path, &buffer)?,
        None => std::io::stdout().write_all(&buffer)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
