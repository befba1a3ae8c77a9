use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use robin_lab::{run, ConfigError, Experiment, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "robin-lab", version, about = "Run a Robin-problem experiment from a JSON config")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for the independent solves.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(cli: Cli) -> Result<Vec<String>, RunError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", cli.config.display())))?;
    let mut config = RunConfig::from_json(&text)?;
    config.experiment = Some(cli.experiment);
    let output = cli
        .output
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| ConfigError::new("output_dir", "give --output or set output_dir"))?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(ConfigError::new("threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| ConfigError::new("threads", e.to_string()))?;
    }
    let outcome = run(&config, &output)?;
    Ok(outcome.summary)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
