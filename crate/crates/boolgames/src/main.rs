use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = boolgames::cli::run_command(std::env::args().skip(1));
    print!("{}", outcome.report);
    ExitCode::from(outcome.code)
}
