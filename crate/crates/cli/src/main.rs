use std::path::PathBuf;
use std::process::ExitCode;

use capax_cli::{run_file, write_artifacts, Mode, Options};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "capax", version, about = "Capacities and eigenvalue shifts for domains with small holes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Newtonian capacity of the hole shape
    Newtonian(Common),
    /// Direct solves over the epsilon list
    Direct(Common),
    /// Series coefficients c_n
    Series(Common),
    /// Direct vs series vs closed form
    Compare(Common),
    /// Eigenvalue shift predictions
    Eigen(Common),
    /// Refinement study
    Converge(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    quad_order: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CAPAX_LOG")).init();
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Newtonian(c) => (Mode::Newtonian, c),
        Command::Direct(c) => (Mode::Direct, c),
        Command::Series(c) => (Mode::Series, c),
        Command::Compare(c) => (Mode::Compare, c),
        Command::Eigen(c) => (Mode::Eigen, c),
        Command::Converge(c) => (Mode::Converge, c),
    };
    let opts = Options { jobs: common.jobs, k_max: common.k_max, quad_order: common.quad_order, ..Options::new(mode) };
    let result = run_file(&common.config, opts).and_then(|a| {
        write_artifacts(&common.out, &a)?;
        Ok(a)
    });
    match result {
        Ok(artifacts) => {
            for a in artifacts {
                println!("{}", common.out.join(a.name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("capax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
