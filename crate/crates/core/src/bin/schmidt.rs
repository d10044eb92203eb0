use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = schmidt::cli::run(std::env::args_os());
    print!("{}", out.report);
    let _ = std::io::stdout().flush();
    if let Some(d) = out.diagnostic {
        eprintln!("{d}");
    }
    ExitCode::from(out.code as u8)
}
