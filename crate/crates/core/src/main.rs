fn main() {
    std::process::exit(chunkchain::cli::run(std::env::args_os()));
}
