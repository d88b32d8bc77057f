fn main() -> std::process::ExitCode {
    dualfeat_cli::main_exit()
}
