use std::process::ExitCode;

fn main() -> ExitCode {
    smallloss::cli::run()
}
