use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

use commands::CliError;

#[derive(Parser)]
#[command(name = "rbd", version, about = "Reliability of series/parallel pipeline models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form reliability at one time.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        time: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Closed-form reliability over the grid {0, t_max/steps, ..., t_max}.
    Curve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "t-max")]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Monte Carlo estimate at one time, compared with the closed form.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "chunk-size", default_value_t = rbd_core::montecarlo::DEFAULT_CHUNK_SIZE)]
        chunk_size: u64,
    },
    /// Runs the full property suite; exits 3 if any property fails.
    Check {
        #[arg(long)]
        spec: PathBuf,
        /// End of the check grid. The default of 50 time units is arbitrary.
        #[arg(long = "t-max", default_value_t = 50.0)]
        t_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bound used by the decay-to-zero property.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("RBD_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("RBD_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let pool = thread_pool()?;
    pool.install(|| match cli.command {
        Command::Eval { spec, time, format } => commands::eval(&spec, time, format),
        Command::Curve {
            spec,
            t_max,
            steps,
            format,
        } => commands::curve(&spec, t_max, steps, format),
        Command::Simulate {
            spec,
            time,
            samples,
            seed,
            chunk_size,
        } => commands::simulate(&spec, time, samples, seed, chunk_size),
        Command::Check {
            spec,
            t_max,
            steps,
            samples,
            seed,
            epsilon,
        } => commands::check(&spec, t_max, steps, samples, seed, epsilon),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::PropertyFailure(out)) => {
            print!("{out}");
            eprintln!("rbd: one or more properties failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
