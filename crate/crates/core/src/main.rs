use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(oddpu::cli::run(std::env::args_os()))
}
