fn main() {
    std::process::exit(kgraph_cli::main_with_args(std::env::args_os()));
}
