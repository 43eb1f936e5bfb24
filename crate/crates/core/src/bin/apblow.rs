fn main() -> std::process::ExitCode {
    apblow::cli::main()
}
