fn main() -> std::process::ExitCode {
    mincorr::cli::main()
}
