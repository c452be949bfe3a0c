fn main() {
    std::process::exit(geoburst_cli::run(std::env::args_os()));
}
