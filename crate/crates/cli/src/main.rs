fn main() {
    std::process::exit(zonecut_cli::run(std::env::args_os()));
}
