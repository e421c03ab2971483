use std::process::ExitCode;

fn main() -> ExitCode {
    ifmfix_cli::main_with(std::env::args_os())
}
