use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gcn_matgrad::commands::{self, CliError, Outcome, Source};
use gcn_matgrad_core::Task;

#[derive(Parser)]
#[command(name = "gcn-matgrad", version, about = "Closed-form GCN gradients, checked against a tape and finite differences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset: karate, ddi, node5 or link5.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// closed, tape or paired.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Fill the timing columns. Off by default so reruns are byte-identical.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn source(&self, restarts: Option<usize>) -> Source {
        Source {
            config: self.config.clone(),
            preset: self.preset.clone(),
            seed: self.seed,
            method: self.method.clone(),
            iterations: self.iterations,
            restarts,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a node classifier and log both gradient paths.
    TrainNode(Common),
    /// Train a link predictor and log both gradient paths.
    TrainLink(Common),
    /// Compare closed form, tape and finite differences at one initialization.
    ValidateGrad {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        corrupt_gradient: Option<usize>,
    },
    /// Input sensitivity map at the trained weights.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// "loss", or "i,j" for one predicted link.
        #[arg(long, default_value = "loss")]
        target: String,
    },
    /// Final-SSE statistics over seeded restarts.
    RestartStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Write the bundled datasets as loadable files.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::TrainNode(c) => commands::train(Task::Node, &c.source(None), &c.out, c.timing),
        Command::TrainLink(c) => commands::train(Task::Link, &c.source(None), &c.out, c.timing),
        Command::ValidateGrad { common: c, corrupt_gradient } => {
            commands::validate_grad(&c.source(None), &c.out, corrupt_gradient, c.timing)
        }
        Command::Sensitivity { common: c, target } => commands::sensitivity(&c.source(None), &target, &c.out),
        Command::RestartStudy { common: c, restarts } => commands::restart_study(&c.source(restarts), &c.out),
        Command::Fixtures { out } => commands::fixtures(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
