use clap::Parser;

fn main() {
    let cli = fracspec::cli::Cli::parse();
    std::process::exit(fracspec::cli::dispatch(cli));
}
