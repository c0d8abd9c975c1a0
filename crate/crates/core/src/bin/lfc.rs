use std::process::ExitCode;

fn main() -> ExitCode {
    lfc_core::cli::main_with_args(std::env::args_os())
}
