use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbscatter::commands::{execute, Command};
use rbscatter::config::RunConfig;
use rbscatter::Error;

#[derive(Parser)]
#[command(name = "rbscatter", version, about = "Quasiperiodic Helmholtz scattering, resonances and trapped modes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent. Side files are named after it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Dotted `key=value` patch applied to the configuration, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// R and T at one (epsilon, beta, nu).
    Scatter,
    /// CSV table over a (beta, nu) grid.
    Sweep,
    /// Complex resonance, line-shape coefficients and zeros.
    Resonance,
    /// Embedded trapped modes and their profiles.
    Trapped,
    /// Main solver against the finite-difference oracle.
    Validate,
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let command = match cli.command {
        Cmd::Scatter => Command::Scatter,
        Cmd::Sweep => Command::Sweep,
        Cmd::Resonance => Command::Resonance,
        Cmd::Trapped => Command::Trapped,
        Cmd::Validate => Command::Validate,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads: must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("--threads: {e}")))?;
    let output = pool.install(|| execute(command, &cfg, cli.out.as_deref()))?;
    match &cli.out {
        Some(path) => std::fs::write(path, &output.body)?,
        None => print!("{}", output.body),
    }
    for (path, text) in &output.files {
        std::fs::write(path, text)?;
    }
    Ok(output.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: consistency checks failed; see the report");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
