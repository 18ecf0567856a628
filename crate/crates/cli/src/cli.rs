use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{cmd_bench, BenchSpec, Problem};
use crate::commands::{cmd_barycenter, cmd_gradcheck, cmd_ot, CostSource};
use crate::config::{GammaSpec, Method, Metric, RunConfig};
use crate::error::CliResult;
use crate::io::Summary;

#[derive(Debug, Parser)]
#[command(
    name = "otaccel",
    version,
    about = "Accelerated Sinkhorn and IBP solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Solver; defaults to aam-sinkhorn for OT and aam-ibp for barycenters.
    #[arg(long, value_enum, global = true)]
    pub method: Option<Method>,
    /// Regularization, or "auto" to derive it from --eps.
    #[arg(long, default_value = "auto", global = true)]
    pub gamma: GammaSpec,
    /// Target accuracy with --gamma auto, certificate tolerance otherwise.
    #[arg(long, default_value_t = 0.01, global = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000, global = true)]
    pub max_iters: usize,
    /// Initial Lipschitz estimate of the adaptive methods.
    #[arg(long, default_value_t = 1.0, global = true)]
    pub l0: f64,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Smooth loaded histograms with this parameter.
    #[arg(long, global = true)]
    pub smooth: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "otaccel-out", global = true)]
    pub out: PathBuf,
    /// Iterations between rounding checks with --gamma auto.
    #[arg(long, default_value_t = 1, global = true)]
    pub check_interval: usize,
    /// Parallel instances in `bench`.
    #[arg(long, default_value_t = 1, global = true)]
    pub workers: usize,
}

impl From<&CommonArgs> for RunConfig {
    fn from(a: &CommonArgs) -> Self {
        RunConfig {
            method: a.method,
            gamma: a.gamma,
            eps: a.eps,
            max_iters: a.max_iters,
            l0: a.l0,
            seed: a.seed,
            smooth: a.smooth,
            out: a.out.clone(),
            check_interval: a.check_interval,
            workers: a.workers,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CostArgs {
    /// Cost matrix CSV (N rows of N values).
    #[arg(long)]
    pub cost: Option<PathBuf>,
    /// Pixel-grid cost used when --cost is absent.
    #[arg(long, value_enum, default_value = "sq-euclidean")]
    pub metric: Metric,
}

impl CostArgs {
    fn source(&self) -> CostSource {
        match &self.cost {
            Some(p) => CostSource::File(p.clone()),
            None => CostSource::Grid(self.metric),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transport between two histograms (CSV or PGM).
    Ot {
        #[arg(long)]
        r: PathBuf,
        #[arg(long)]
        c: PathBuf,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Regularized barycenter of several histograms.
    Barycenter {
        /// Repeat once per measure.
        #[arg(long = "measure", required = true)]
        measures: Vec<PathBuf>,
        /// Comma-separated weights; uniform when omitted.
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Seeded batch of synthetic image instances for every method.
    Bench {
        #[arg(long, value_enum, default_value = "ot")]
        problem: Problem,
        #[arg(long, default_value_t = 5)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        side: usize,
        /// Measures per barycenter instance.
        #[arg(long, default_value_t = 3)]
        measures: usize,
        /// Comma-separated target accuracies; defaults to --eps.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
    },
    /// Finite-difference check of the dual gradients.
    Gradcheck {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
}

pub fn execute(cli: &Cli) -> CliResult<Summary> {
    let config = RunConfig::from(&cli.common);
    match &cli.command {
        Command::Ot { r, c, cost } => cmd_ot(&config, r, c, &cost.source()),
        Command::Barycenter {
            measures,
            weights,
            cost,
        } => cmd_barycenter(&config, measures, &cost.source(), weights.as_deref()),
        Command::Bench {
            problem,
            instances,
            side,
            measures,
            targets,
        } => cmd_bench(
            &config,
            &BenchSpec {
                problem: *problem,
                instances: *instances,
                side: *side,
                measures: *measures,
                targets: targets.clone(),
            },
        ),
        Command::Gradcheck { n, points } => cmd_gradcheck(&config, *n, *points),
    }
}

/// Runs a parsed command line, printing the summary to stdout or the error
/// to stderr, and returns the exit code.
pub fn run(cli: Cli) -> u8 {
    match execute(&cli) {
        Ok(summary) => {
            print!("{}", summary.render());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_anywhere() {
        let cli = Cli::try_parse_from([
            "otaccel",
            "--eps",
            "0.05",
            "ot",
            "--r",
            "a.csv",
            "--c",
            "b.pgm",
            "--gamma",
            "0.1",
            "--method",
            "apdagd-baseline",
        ])
        .unwrap();
        assert_eq!(cli.common.eps, 0.05);
        assert_eq!(cli.common.gamma, GammaSpec::Fixed(0.1));
        assert_eq!(cli.common.method, Some(Method::ApdagdBaseline));
    }

    #[test]
    fn bench_targets_list() {
        let cli = Cli::try_parse_from(["otaccel", "bench", "--targets", "0.1,0.01"]).unwrap();
        match cli.command {
            Command::Bench { targets, .. } => assert_eq!(targets, vec![0.1, 0.01]),
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn unknown_method_is_rejected() {
        assert!(Cli::try_parse_from(["otaccel", "--method", "newton", "gradcheck"]).is_err());
    }
}
