use std::panic;
use std::process::ExitCode;

use clap::Parser;
use env_logger::WriteStyle;
use flowdpc_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();

    let level = match cli.command.verbosity() {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let mut logger = env_logger::Builder::new();
    logger.filter_level(level).parse_default_env();
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        logger.write_style(WriteStyle::Never);
    }
    logger.init();

    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}
