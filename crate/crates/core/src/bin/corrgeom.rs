fn main() {
    std::process::exit(corrgeom::cli::main_with_args(std::env::args_os()));
}
