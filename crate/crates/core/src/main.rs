use clap::Parser;

fn main() {
    env_logger::init();
    let cli = gflame::cli::Cli::parse();
    std::process::exit(gflame::cli::main_with(cli, std::env::var("SEED").ok()));
}
