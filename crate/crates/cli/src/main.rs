use clap::Parser;

fn main() {
    let cli = xaskit_cli::Cli::parse();
    std::process::exit(xaskit_cli::cli::run(cli));
}
