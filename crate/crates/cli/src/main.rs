use std::process::ExitCode;

use clap::Parser;
use rgl_cli::commands::{run, Cli};

fn configure_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let env = std::env::var("RGL_THREADS").ok().map(|v| v.parse::<usize>()).transpose()?;
    if let Some(n) = env.or(flag) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|_| run(cli));
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
