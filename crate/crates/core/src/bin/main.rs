fn main() {
    std::process::exit(jacobi_orbits::cli::run(std::env::args_os()));
}
