use glottokit::cli;

fn main() {
    let cmd = match cli::parse_args(std::env::args_os()) {
        Ok(cmd) => cmd,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            let err = cli::CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(cli::EXIT_USAGE);
        }
    };
    std::process::exit(cli::execute(&cmd));
}
