use clap::Parser;

fn main() -> anyhow::Result<()> {
    arel::cli::run(arel::cli::Cli::parse())
}
