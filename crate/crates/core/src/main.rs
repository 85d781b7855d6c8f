use std::io;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("OCEAN_KMODES_LOG")).init();
    let code = ocean_kmodes::cli::run(
        std::env::args_os(),
        &mut io::stdin().lock(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
