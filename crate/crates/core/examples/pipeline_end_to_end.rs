//! The four batch stages on one seed, written under a temporary directory.

use radshift::config::RunConfig;
use radshift::pipeline::{cmd_extract, cmd_gen, cmd_report, cmd_run};

fn main() -> radshift::Result<()> {
    let out = std::env::temp_dir().join("radshift-example");
    let config = RunConfig::default().with_seed(1).with_output(out.clone());
    println!("gen: {} volumes", cmd_gen(&config)?.len());
    println!("extract: {} rows", cmd_extract(&config)?);
    println!("run: {} reports", cmd_run(&config)?.len());
    print!("{}", cmd_report(&config)?);
    println!("outputs under {}", out.display());
    Ok(())
}
