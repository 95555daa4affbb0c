use clap::Parser;
use treemath_cli::commands::{run, Cli};
use treemath_cli::exit_code;

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    if let Err(e) = run(cli, &mut stdout.lock(), &mut stderr.lock()) {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}
