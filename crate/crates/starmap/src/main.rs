use std::process::ExitCode;

fn main() -> ExitCode {
    starmap::cli::run_from_args()
}
