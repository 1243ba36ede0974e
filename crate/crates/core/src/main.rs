fn main() {
    std::process::exit(ymh_loops::cli::run(std::env::args_os()));
}
