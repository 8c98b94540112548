use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use radshift::config::RunConfig;
use radshift::pipeline::{cmd_extract, cmd_gen, cmd_report, cmd_run, exit_code};

/// Synthetic-phantom radiomics robustness experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single phantom seed (overrides the config's seed list only).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write phantom acquisitions and ground-truth masks.
    Gen,
    /// Segment the written acquisitions and write the feature table.
    Extract,
    /// Run every configured scenario on the feature table.
    Run,
    /// Tabulate saved reports and rewrite the summary CSV.
    Report,
}

fn resolve(cli: &Cli) -> radshift::Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        c = c.with_output(out.clone());
    }
    if let Some(seed) = cli.seed {
        c = c.with_seed(seed);
    }
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|c| match cli.command {
        Command::Gen => cmd_gen(&c).map(|files| format!("wrote {} volumes under {}", files.len(), c.output.display())),
        Command::Extract => cmd_extract(&c).map(|n| format!("wrote {n} feature rows")),
        Command::Run => cmd_run(&c).map(|r| format!("wrote {} reports", r.len())),
        Command::Report => cmd_report(&c),
    });
    match result {
        Ok(msg) => {
            println!("{}", msg.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
