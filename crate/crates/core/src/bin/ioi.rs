use clap::Parser;

fn main() {
    let cli = ioi_core::cli::Cli::parse();
    std::process::exit(ioi_core::cli::execute(cli));
}
