use std::io;
use std::process::ExitCode;

use clap::Parser;
use gridwatch::cli::{self, Cli};

fn main() -> ExitCode {
    cli::init_logging();
    let args = Cli::parse();
    let stdout = io::stdout();
    match cli::run(&args, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gridwatch: {e}");
            ExitCode::FAILURE
        }
    }
}
