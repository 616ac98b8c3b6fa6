use clap::error::ErrorKind;
use clap::Parser;

use abcc_cli::{run, RunConfig};

fn init_logging(config: &RunConfig) {
    let env = env_logger::Env::new().filter_or("ABCC_LOG", "warn");
    let mut builder = env_logger::Builder::from_env(env);
    if let Some(spec) = &config.log {
        builder.parse_filters(spec);
    }
    let _ = builder.try_init();
}

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(config) => config,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    init_logging(&config);
    match run(&config) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report)
                .expect("report serialization cannot fail");
            println!("{json}");
            std::process::exit(report.status.exit_code());
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
