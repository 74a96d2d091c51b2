fn main() {
    std::process::exit(febaa_cli::dispatch(std::env::args_os()));
}
