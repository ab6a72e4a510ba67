use std::process::ExitCode;

fn main() -> ExitCode {
    rabi_triangle::cli::main()
}
