fn main() {
    std::process::exit(spikekit::cli::run(std::env::args_os()));
}
