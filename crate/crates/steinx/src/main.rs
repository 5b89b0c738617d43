use clap::Parser;

fn main() {
    let cli = steinx::cli::Cli::parse();
    std::process::exit(steinx::cli::run(cli));
}
