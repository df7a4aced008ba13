use std::process::ExitCode;

fn main() -> ExitCode {
    haarwave::cli::run()
}
