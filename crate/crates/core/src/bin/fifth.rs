use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fifth::cli::{self, Command, OracleChoice, RunConfig, Streams};

#[derive(Parser)]
#[command(name = "fifth", version, about = "Propagation-network constraint solver with learned search guidance")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve (or minimize) the query of a program file.
    Solve { program: PathBuf },
    /// Solve a corpus with tracing and train a model bundle.
    Train { corpus: Option<PathBuf> },
    /// Compare uniform and learned value ordering.
    Measure { train: Option<PathBuf>, eval: Option<PathBuf> },
    /// Run the built-in consistency suites.
    Check {
        #[arg(long)]
        self_test: bool,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Maximum recursion depth.
    #[arg(long, global = true)]
    depth: Option<u64>,
    /// Propagator step budget.
    #[arg(long, global = true)]
    steps: Option<u64>,
    /// Search node budget.
    #[arg(long, global = true)]
    nodes: Option<u64>,
    #[arg(long, global = true)]
    precision: Option<f64>,
    #[arg(long, global = true, default_value = "uniform")]
    oracle: OracleChoice,
    /// Model bundle directory.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Write a JSON-lines trace of every network write.
    #[arg(long, global = true)]
    trace: bool,
    /// Summarize settled frames during search.
    #[arg(long, global = true)]
    gc: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { cli::EXIT_USAGE as u8 } else { 0 });
        }
    };
    let (command, inputs) = match args.command {
        Sub::Solve { program } => (Command::Solve, vec![program]),
        Sub::Train { corpus } => (Command::Train, corpus.into_iter().collect()),
        Sub::Measure { train, eval } => (Command::Measure, train.into_iter().chain(eval).collect()),
        Sub::Check { self_test } => (Command::Check { self_test }, Vec::new()),
    };
    let f = args.flags;
    let config = RunConfig {
        inputs,
        depth: f.depth,
        steps: f.steps,
        nodes: f.nodes,
        precision: f.precision,
        seed: f.seed,
        model: f.model,
        trace: f.trace,
        out: f.out,
        oracle: f.oracle,
        collect_garbage: f.gc,
        ..RunConfig::new(command)
    };
    let (mut stdout, mut stderr) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = cli::run(&config, &mut Streams { stdout: &mut stdout, stderr: &mut stderr });
    ExitCode::from(code as u8)
}
