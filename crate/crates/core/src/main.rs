fn main() {
    std::process::exit(censored_glm::cli::run());
}
