use std::process::ExitCode;

use aoi_harq_cli::{init_threads, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(&cli, std::io::stdout().lock())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
