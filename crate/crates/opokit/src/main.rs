fn main() {
    std::process::exit(opokit::cli::run(std::env::args_os().skip(1)));
}
