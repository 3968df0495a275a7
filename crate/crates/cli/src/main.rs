fn main() {
    std::process::exit(fxstats_cli::main_with(std::env::args_os()));
}
