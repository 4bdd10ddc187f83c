fn main() -> std::process::ExitCode {
    ionsense::cli::main()
}
