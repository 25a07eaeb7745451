fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(darboux_kit::cli::main_entry())
}
