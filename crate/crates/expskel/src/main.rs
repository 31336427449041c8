fn main() {
    std::process::exit(expskel::run(std::env::args_os()));
}
