use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use corrlife::config::{RunConfig, Settings};
use corrlife::pipeline;
use corrlife::{Error, ErrorKind};

/// Lifetime of correlation between stock prices.
///
/// Settings come from an optional `key = value` config file; flags override
/// file values. Exit codes: 0 success, 1 usage or config error, 2 data error,
/// 3 internal invariant violation.
#[derive(Debug, Parser)]
#[command(name = "corrlife", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file with `key = value` lines
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Price data: a long-format CSV (date,ticker,close) or a directory of TICKER.csv files (date,close)
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<String>,

    /// First date to use (YYYY-MM-DD)
    #[arg(long, global = true, value_name = "DATE")]
    from: Option<String>,

    /// Last date to use (YYYY-MM-DD)
    #[arg(long, global = true, value_name = "DATE")]
    to: Option<String>,

    /// A single window width in trading days
    #[arg(long, global = true, value_name = "N")]
    window: Option<String>,

    /// Window widths, e.g. `2..5,10,20`
    #[arg(long, global = true, value_name = "LIST")]
    windows: Option<String>,

    /// Window step in trading days [default: 1]
    #[arg(long, global = true, value_name = "N")]
    step: Option<String>,

    /// Lower bound of the strong level [default: 0.5]
    #[arg(long, global = true, value_name = "RHO")]
    strong_threshold: Option<String>,

    /// Calendar alignment: `intersect` or `ffill:<max gap>` [default: intersect]
    #[arg(long, global = true, value_name = "POLICY")]
    align: Option<String>,

    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,

    /// Output format: csv or json [default: csv]
    #[arg(long, global = true, value_name = "FMT")]
    format: Option<String>,

    /// Random seed for synthetic commands
    #[arg(long, global = true, value_name = "N")]
    seed: Option<String>,

    /// Any other config key, e.g. `--set rho=0.7` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full-period correlation matrix, pair list and level census
    Corr,
    /// Lifetime runs, per-pair mean lifetimes and portfolio mean/stddev curves
    Lifetime,
    /// Rolling minimum spanning trees, edge survival and tree half-life
    Mst,
    /// Measured correlation versus sampling interval for asynchronous trades
    Epps,
    /// Generate a synthetic correlated market as long-format prices.csv
    Synth,
}

fn settings(cli: &Cli) -> Result<Settings, Error> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let flags = [
        ("data", &cli.data),
        ("from", &cli.from),
        ("to", &cli.to),
        ("window", &cli.window),
        ("windows", &cli.windows),
        ("step", &cli.step),
        ("strong_threshold", &cli.strong_threshold),
        ("align", &cli.align),
        ("out", &cli.out),
        ("format", &cli.format),
        ("seed", &cli.seed),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            s.set(key, v)?;
        }
    }
    for assignment in &cli.set {
        s.set_pair(assignment)?;
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = RunConfig::from_settings(settings(cli)?)?;
    let files = match cli.command {
        Command::Corr => {
            let report = pipeline::run_corr(&cfg)?;
            println!("{}", report.census);
            report.files
        }
        Command::Lifetime => pipeline::run_lifetime(&cfg)?.files,
        Command::Mst => pipeline::run_mst(&cfg)?.files,
        Command::Epps => pipeline::run_epps(&cfg)?.files,
        Command::Synth => pipeline::run_synth(&cfg)?,
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Invariant => 3,
            })
        }
    }
}
