fn main() -> std::process::ExitCode {
    treechain::cli::main()
}
