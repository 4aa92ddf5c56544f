fn main() {
    std::process::exit(ptdep::run(std::env::args_os()));
}
