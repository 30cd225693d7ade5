use clap::Parser;

fn main() -> std::process::ExitCode {
    nfl_core::cli::main_with(nfl_core::cli::Cli::parse())
}
