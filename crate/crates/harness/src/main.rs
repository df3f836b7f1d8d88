fn main() -> std::process::ExitCode {
    causeval_harness::cli::run(std::env::args_os())
}
