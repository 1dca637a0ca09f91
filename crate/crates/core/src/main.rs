use clap::Parser;

use cauchy_time::cli::{execute, Cli};

fn main() {
    let out = execute(&Cli::parse());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    std::process::exit(out.code);
}
