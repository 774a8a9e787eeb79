use clap::Parser;

fn main() {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    if let Ok(cli) = adapro::cli::Cli::try_parse_from(&args) {
        if cli.verbose {
            env_logger::Builder::new().filter_level(log::LevelFilter::Debug).init();
        }
    }
    std::process::exit(adapro::cli::run(args));
}
