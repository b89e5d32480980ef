use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = adaptrobust_cli::Cli::parse();
    match adaptrobust_cli::run(&cli.command) {
        Ok(out) => {
            println!("{}", out.summary.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
