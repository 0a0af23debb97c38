mod args;
mod commands;
mod config;
mod error;
mod io;

use clap::Parser;

use crate::args::Cli;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::from_toml(&io::read_text(path)?)?,
        None => RunConfig::default_for(cli.command.name())?,
    };
    cli.command.apply(&mut cfg)?;
    if let Some(path) = &cli.global.write_config {
        io::write_text(path, &cfg.to_toml()?)?;
        println!("config written to {}", path.display());
        return Ok(());
    }
    set_threads(cli.global.threads)?;
    commands::run(&cfg, cli.global.strict)
}

fn set_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("warning: built without the `parallel` feature; running on one thread");
    }
    Ok(())
}
