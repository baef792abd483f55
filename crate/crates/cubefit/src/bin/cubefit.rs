fn main() {
    std::process::exit(cubefit::cli::main_entry());
}
