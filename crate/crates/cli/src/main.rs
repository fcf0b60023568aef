use clap::Parser;

fn main() {
    let cli = irs_cli::Cli::parse();
    if let Err(e) = irs_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(irs_cli::exit_code(&e));
    }
}
