//! Binary entry point; all behavior lives in the library's `cli` module.

fn main() {
    std::process::exit(metrosim::cli::run());
}
