fn main() {
    let mut env = ran_cli::Environment::from_process();
    let code = ran_cli::run(
        std::env::args_os(),
        &mut env,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
