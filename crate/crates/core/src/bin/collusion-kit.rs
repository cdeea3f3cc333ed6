fn main() -> std::process::ExitCode {
    collusion_kit::cli::main()
}
