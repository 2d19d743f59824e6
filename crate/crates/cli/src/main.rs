use clap::Parser;

fn main() {
    let args = gratis_cli::cli::Cli::parse();
    if let Err(e) = gratis_cli::cli::run(args) {
        eprintln!("error: {}", e.message().replace('\n', " "));
        std::process::exit(e.exit_code());
    }
}
