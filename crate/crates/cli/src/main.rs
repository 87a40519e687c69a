mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { input } => commands::check(input),
        Command::Map { input, k, budget, arch, final_program } => {
            commands::map(input, *k, *budget, arch, final_program.as_deref())
        }
        Command::Sweep { input, k, budget, arch } => commands::sweep(input, k, budget, arch),
        Command::Gen { kind, out, seed } => commands::gen(kind, *seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
