use clap::Parser;

fn main() {
    let cli = match m2rec_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // bad flags are configuration errors; help and version exit cleanly
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = m2rec_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
