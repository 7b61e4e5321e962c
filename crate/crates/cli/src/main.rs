use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = trimode::Cli::parse();
    match trimode::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("trimode: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
