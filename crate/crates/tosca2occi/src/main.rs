fn main() {
    std::process::exit(tosca2occi::cli::run(std::env::args_os()));
}
