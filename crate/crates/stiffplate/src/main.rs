fn main() {
    std::process::exit(stiffplate::cli::run(std::env::args_os()));
}
