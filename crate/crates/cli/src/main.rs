fn main() {
    std::process::exit(weakprobe_cli::run(std::env::args_os()));
}
