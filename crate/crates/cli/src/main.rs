use clap::Parser;

fn main() {
    let cli = judgekit_cli::Cli::parse();
    if let Err(error) = judgekit_cli::run(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
