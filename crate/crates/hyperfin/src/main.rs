use std::process::ExitCode;

fn main() -> ExitCode {
    hyperfin::cli::run()
}
