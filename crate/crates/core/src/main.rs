use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use coalg::cli::{run, Cli};

fn try_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let out = run(&cli)?;
    std::io::stdout()
        .write_all(out.stdout.as_bytes())
        .context("writing output")?;
    Ok(ExitCode::from(out.code as u8))
}

fn main() -> ExitCode {
    match try_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
