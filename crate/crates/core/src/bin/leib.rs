fn main() {
    std::process::exit(leib_core::cli::main());
}
