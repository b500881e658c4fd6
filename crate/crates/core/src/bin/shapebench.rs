use std::process::ExitCode;

fn main() -> ExitCode {
    shapebench::cli::main_with_args(std::env::args_os())
}
