//! `refmaps` command-line tool; see `refmaps --help`.

mod cli;

fn main() {
    std::process::exit(cli::run(std::env::args_os()));
}
