use clap::Parser;

fn main() {
    let cli = qhm_cli::Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    std::process::exit(qhm_cli::dispatch(cli));
}
