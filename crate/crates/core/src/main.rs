fn main() {
    std::process::exit(bdesn::experiments::cli::run(std::env::args_os()));
}
