mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match commands::run(cli.command, cli.root.as_deref()) {
        Ok(report) => {
            let _ = std::io::stdout().write_all(report.render(cli.json).as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            if cli.json {
                println!("{}", report::error_json(e.name(), &e.to_string()));
            }
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
