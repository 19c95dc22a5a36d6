use clap::Parser;

fn main() {
    let cli = semiwave_cli::Cli::parse();
    std::process::exit(semiwave_cli::run(&cli));
}
