fn main() {
    std::process::exit(leadoff::cli::main());
}
