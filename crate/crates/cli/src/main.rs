fn main() -> std::process::ExitCode {
    fdcg_cli::main_with(std::env::args())
}
