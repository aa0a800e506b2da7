mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};

fn run(cli: &Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .context("starting the thread pool")?;
    if let Some(dir) = &cli.cache_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating cache dir {}", dir.display()))?;
    }
    let cache = cli.cache_dir.as_deref();
    let out = match &cli.command {
        Command::Constants(p) => commands::constants(p, cli.format)?,
        Command::Tail(c) => commands::tail(c, cli.format, cache)?,
        Command::Simulate(s) => commands::simulate(s, cli.format)?,
        Command::Verify(v) => commands::verify(v, cli.format, cache)?,
        Command::Rates(r) => commands::rates(r, cli.format, cache)?,
    };
    output::emit(&out.text, cli.output.as_deref())?;
    Ok(out.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
