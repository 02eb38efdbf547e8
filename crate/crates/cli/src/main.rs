use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use homodiv::{Fairness, Objective};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "homodiv", version, about = "Envy-free lotteries over homogeneous divisible goods")]
pub(crate) struct Cli {
    /// Directory for artifacts; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub(crate) enum Command {
    /// Solve the flow LP and decompose the optimum into a lottery.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve the per-agent piece-distribution LP for one item and try to realize it.
    NaiveSolve {
        instance: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        item: usize,
    },
    /// Random serial dictatorship.
    Rsd {
        instance: PathBuf,
        /// Enumerate every ordering (the default).
        #[arg(long, conflicts_with = "samples")]
        exact: bool,
        /// Draw this many orderings instead.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-verify a lottery file against an instance.
    Verify {
        instance: PathBuf,
        #[arg(long)]
        lottery: PathBuf,
        #[arg(long, value_enum, default_value_t = FairnessArg::Ef)]
        fairness: FairnessArg,
        /// Also search for dominating lotteries on this grid.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Required improvement factor minus one for a dominator.
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
    },
    /// Sweep weight vectors over the flow LP and list deterministic outcome utilities.
    Frontier {
        instance: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 11)]
        directions: usize,
        #[arg(long, value_enum, default_value_t = FairnessArg::Ef)]
        fairness: FairnessArg,
    },
    /// Run a protocol against the linear-answering adversary and audit its lottery.
    AdversaryAudit {
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Left end of the bent interval; chosen from the transcript if omitted.
        #[arg(long)]
        x1: Option<f64>,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Uniform)]
        protocol: ProtocolArg,
        /// Grid used by the flow protocol.
        #[arg(long, default_value_t = 0.5)]
        solver_epsilon: f64,
        /// Query budget; defaults to floor(1/(2 epsilon)).
        #[arg(long, conflicts_with = "unbounded")]
        budget: Option<usize>,
        /// Let the protocol ask as many queries as it likes.
        #[arg(long)]
        unbounded: bool,
        /// Audit this two-agent, two-item lottery instead of running a protocol.
        #[arg(long, conflicts_with = "protocol")]
        lottery: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long)]
    epsilon: f64,
    /// welfare, leximin or weights=<w1,w2,...>
    #[arg(long, default_value = "welfare", value_parser = parse_objective)]
    objective: Objective,
    #[arg(long, value_enum, default_value_t = FairnessArg::Ef)]
    fairness: FairnessArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FairnessArg {
    Ef,
    Prop,
    None,
}

impl From<FairnessArg> for Fairness {
    fn from(f: FairnessArg) -> Self {
        match f {
            FairnessArg::Ef => Fairness::EnvyFree,
            FairnessArg::Prop => Fairness::Proportional,
            FairnessArg::None => Fairness::None,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    Uniform,
    Flow,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "welfare" => Ok(Objective::Welfare),
        "leximin" => Ok(Objective::Leximin),
        _ => {
            let list = s
                .strip_prefix("weights=")
                .ok_or_else(|| format!("unknown objective {s:?}; use welfare, leximin or weights=<csv>"))?;
            list.split(',')
                .map(|w| w.trim().parse::<f64>().map_err(|e| format!("bad weight {w:?}: {e}")))
                .collect::<Result<Vec<_>, _>>()
                .map(Objective::Weights)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
