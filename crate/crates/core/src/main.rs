fn main() { std::process::exit(trilin::cli::main()); }
