use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = strip_scatter_cli::parse_args(std::env::args_os())
        .and_then(|cfg| cfg.map_or(Ok(()), |cfg| strip_scatter_cli::run(&cfg)));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code as u8)
        }
    }
}
