use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(usd_embed::app::run(std::env::args_os()))
}
