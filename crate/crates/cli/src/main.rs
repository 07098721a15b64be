use clap::Parser;
use rwelect_cli::{dispatch, Cli};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    dispatch(cli, &mut stdout.lock())
}
