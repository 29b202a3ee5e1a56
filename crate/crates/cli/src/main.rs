use clap::Parser;
use tunebench_cli::args::Cli;
use tunebench_cli::commands::run;

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
