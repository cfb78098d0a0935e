use clap::Parser;
use lumix_lab::cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = cli.run() {
        eprintln!("error[{}]: {e}", e.category());
        std::process::exit(e.exit_code() as i32);
    }
}
