use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddtqw::cli::{self, exit_code_for, Command};
use ddtqw::Execution;

#[derive(Parser)]
#[command(
    name = "ddtqw",
    version,
    about = "Driven discrete-time quantum walk simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-step vertex (and optionally eigenmode) intensities
    Simulate(Args),
    /// Eigenfrequencies and coin-traced eigenvector weights
    Eigen(Args),
    /// Driven search for the marked target vertex
    Search(Args),
    /// Simulated vs closed-form eigenmode intensities
    Oracle(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment files (TOML)
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; each experiment writes into <out>/<name>/
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Experiments to run concurrently
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Eigen(a) => (Command::Eigen, a),
        Cmd::Search(a) => (Command::Search, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
    };

    let run = || {
        let exec = if args.jobs > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        };
        cli::run_many(command, &args.configs, &args.out, exec)
    };
    #[cfg(feature = "parallel")]
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs as usize)
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", args.jobs);
            return ExitCode::from(cli::EXIT_IO as u8);
        }
    };
    #[cfg(not(feature = "parallel"))]
    let results = run();

    let mut code = cli::EXIT_OK;
    for (path, result) in results {
        match result {
            Ok(outcome) => {
                println!(
                    "{} [{}]: {} -> {}",
                    outcome.name,
                    command.name(),
                    outcome.message,
                    outcome.dir.display()
                );
                code = code.max(outcome.exit_code);
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                code = code.max(exit_code_for(&e));
            }
        }
    }
    ExitCode::from(code as u8)
}
