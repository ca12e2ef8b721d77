use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridwatch::simgrid::{self, Scenario};

#[derive(Debug, Parser)]
#[command(name = "simgrid", version, about = "Mock grid information services with injectable faults")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start every service in the scenario and print one JSON line per service.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

async fn serve(path: PathBuf, host: IpAddr) -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(&path)?;
    let grid = simgrid::serve(&scenario, host).await?;
    for s in &grid.services {
        println!("{}", serde_json::to_string(s)?);
    }
    tokio::signal::ctrl_c().await?;
    grid.shutdown().await;
    Ok(())
}

fn main() -> ExitCode {
    gridwatch::cli::init_logging();
    let Command::Serve { scenario, host } = Args::parse().command;
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    match runtime.block_on(serve(scenario, host)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simgrid: {e}");
            ExitCode::FAILURE
        }
    }
}
