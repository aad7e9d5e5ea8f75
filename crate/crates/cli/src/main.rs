fn main() { std::process::exit(qvi_cli::run(std::env::args_os())); }
