use std::process::ExitCode;

use clap::Parser;
use quadcert::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = cli.command.run();
    println!("{}", report.to_json());
    ExitCode::from(report.status.exit_code() as u8)
}
