fn main() {
    let code = robandit::app::run(std::env::args_os(), std::env::var("ROBANDIT_SEED").ok());
    std::process::exit(code);
}
