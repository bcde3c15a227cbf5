fn main() {
    std::process::exit(cfpairs::cli::run(std::env::args_os()));
}
