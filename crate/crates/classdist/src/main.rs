use clap::Parser;
use classdist::cli::{self, Cli, Command};

fn main() {
    let cli = Cli::parse();
    if matches!(cli.command, Command::Serve) {
        tracing_subscriber::fmt()
            .with_env_filter(
                tracing_subscriber::EnvFilter::try_from_default_env()
                    .unwrap_or_else(|_| "info".into()),
            )
            .init();
    }
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = cli::run(cli, &mut stdout) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
