fn main() {
    std::process::exit(mavils_core::cli::main());
}
