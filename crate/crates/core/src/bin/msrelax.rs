fn main() {
    std::process::exit(msrelax::cli::main());
}
