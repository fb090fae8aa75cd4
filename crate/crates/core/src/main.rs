fn main() {
    std::process::exit(qgfem::cli::run(std::env::args_os()));
}
