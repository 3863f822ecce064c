fn main() {
    std::process::exit(tabletop::cli::main(std::env::args_os()));
}
