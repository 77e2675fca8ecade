mod args;
mod commands;
mod error;
mod io;
mod reproduce;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliResult;

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Gram(a) => commands::gram(a),
        Command::Check(a) => commands::check(a),
        Command::Synth(a) => commands::synth(a),
        Command::Verify(a) => commands::verify(a),
        Command::Reproduce(a) => reproduce::reproduce(a),
        Command::SdpSolve => commands::sdp_solve(),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("synthctl: {e}");
        std::process::exit(e.code);
    }
}
