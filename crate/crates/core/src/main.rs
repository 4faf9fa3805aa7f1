fn main() {
    let code = almost_anosov::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}
