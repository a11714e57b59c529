fn main() -> std::process::ExitCode {
    approxvar::cli::main()
}
