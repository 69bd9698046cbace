fn main() {
    std::process::exit(prospect_explain_cli::run(std::env::args_os()));
}
