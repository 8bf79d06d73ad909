use clap::Parser;

fn main() {
    let cli = subdiff_cli::Cli::parse();
    std::process::exit(subdiff_cli::run(cli));
}
