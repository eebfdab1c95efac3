use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(stochknap_harness::cli::main_with(std::env::args_os()))
}
