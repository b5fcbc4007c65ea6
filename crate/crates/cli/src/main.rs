use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(cascade_lab::run(std::env::args_os()) as u8)
}
