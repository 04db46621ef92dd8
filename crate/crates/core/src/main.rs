fn main() {
    std::process::exit(fastsvt::cli::main_with_env());
}
