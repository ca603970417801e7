use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match bgp_cli::run(std::env::args_os(), &mut stdout) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bgp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
