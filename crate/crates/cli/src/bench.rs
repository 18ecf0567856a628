//! Seeded batch comparisons of the OT or barycenter methods.
//!
//! Every instance is solved once per method and target accuracy. The long
//! CSV has one row per iteration and carries no timings, so a given seed and
//! configuration always produce the same bytes, whatever `--workers` is.

use std::fmt::Write as _;
use std::fs;

use clap::ValueEnum;
use otaccel::barycenter::{run_accelerated_ibp, run_ibp, BarycenterProblem};
use otaccel::instances::{blob_image, grid_cost, image_histogram, GridMetric};
use otaccel::logmath::smooth_marginals;
use otaccel::ot::{approximate_ot, approximation_parameters, ApproxOptions, OtStop};
use otaccel::{CostMatrix, Histogram, TraceRow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Method, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Ot,
    Barycenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub problem: Problem,
    pub instances: usize,
    /// Images are `side x side`.
    pub side: usize,
    /// Measures per barycenter instance.
    pub measures: usize,
    /// Target accuracies; empty means `--eps` alone.
    pub targets: Vec<f64>,
}

pub const BENCH_HEADER: &str = "instance,method,eps,iter,dual,feas_l1,gap,L,A";

/// Outcome of one (instance, method, target) solve.
#[derive(Debug, Clone, PartialEq)]
struct Solve {
    method: Method,
    eps: f64,
    /// `None` when the iteration budget ran out.
    iterations: Option<usize>,
    trace: Vec<TraceRow>,
}

fn methods(problem: Problem) -> &'static [Method] {
    match problem {
        Problem::Ot => &[
            Method::Sinkhorn,
            Method::AamSinkhorn,
            Method::ApdagdBaseline,
        ],
        Problem::Barycenter => &[Method::Ibp, Method::AamIbp],
    }
}

/// Images of instance `index`: two for OT, `spec.measures` for barycenters.
pub fn instance_images(seed: u64, index: usize, spec: &BenchSpec) -> CliResult<Vec<Histogram>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    let count = match spec.problem {
        Problem::Ot => 2,
        Problem::Barycenter => spec.measures,
    };
    (0..count)
        .map(|_| Ok(image_histogram(&blob_image(&mut rng, spec.side))?))
        .collect()
}

fn solve_instance(
    config: &RunConfig,
    spec: &BenchSpec,
    cost: &CostMatrix,
    images: &[Histogram],
) -> CliResult<Vec<Solve>> {
    let mut out = Vec::new();
    for &eps in &spec.targets {
        for &method in methods(spec.problem) {
            let (iterations, trace) = match spec.problem {
                Problem::Ot => {
                    let opts = ApproxOptions {
                        method: method.ot()?,
                        max_iters: config.max_iters,
                        l0: config.l0,
                        check_interval: config.check_interval,
                    };
                    match approximate_ot(cost, &images[0], &images[1], eps, opts) {
                        Ok(res) => (Some(res.iterations), res.trace),
                        Err(otaccel::Error::IterationLimit { .. }) => (None, Vec::new()),
                        Err(e) => return Err(e.into()),
                    }
                }
                Problem::Barycenter => {
                    let (gamma, eps_prime) = approximation_parameters(cost, eps)?;
                    let measures = images
                        .iter()
                        .map(|h| smooth_marginals(h, eps_prime))
                        .collect::<otaccel::Result<Vec<_>>>()?;
                    let m = measures.len();
                    let prob = BarycenterProblem::with_shared_cost(
                        measures,
                        cost.clone(),
                        vec![1.0; m],
                        gamma,
                    )?;
                    let stop = OtStop::new(config.max_iters, eps);
                    let run = if method.barycenter_accelerated()? {
                        run_accelerated_ibp(&prob, config.l0, stop)?
                    } else {
                        run_ibp(&prob, stop)?
                    };
                    (run.converged.then(|| run.iterations()), run.trace)
                }
            };
            out.push(Solve {
                method,
                eps,
                iterations,
                trace,
            });
        }
    }
    Ok(out)
}

fn csv_rows(instance: usize, solves: &[Solve], buf: &mut String) {
    for s in solves {
        for row in &s.trace {
            let _ = writeln!(
                buf,
                "{instance},{},{},{},{},{},{},{},{}",
                s.method.name(),
                s.eps,
                row.iteration,
                row.dual,
                row.feas_l1,
                row.gap,
                row.lipschitz,
                row.accumulator
            );
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs the batch, writes `bench.csv` and `bench_summary.txt` into
/// `config.out` and returns the summary. Fails with exit code 2 if any solve
/// ran out of iterations; both files are still written.
pub fn cmd_bench(config: &RunConfig, spec: &BenchSpec) -> CliResult<Summary> {
    config.validate()?;
    if spec.instances == 0 {
        return Err(CliError::Config(
            "empty batch: --instances must be at least 1".into(),
        ));
    }
    if spec.side < 2 {
        return Err(CliError::Config("--side must be at least 2".into()));
    }
    if spec.problem == Problem::Barycenter && spec.measures < 2 {
        return Err(CliError::Config("--measures must be at least 2".into()));
    }
    let mut spec = spec.clone();
    if spec.targets.is_empty() {
        spec.targets.push(config.eps);
    }
    if spec.targets.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Config(
            "target accuracies must be positive".into(),
        ));
    }
    let cost = grid_cost(spec.side, GridMetric::SqEuclidean)?;
    let workers = config.workers.min(spec.instances);

    // instance i goes to worker i % workers; results are merged by index
    let mut results: Vec<Option<CliResult<Vec<Solve>>>> =
        (0..spec.instances).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (spec, cost) = (&spec, &cost);
                scope.spawn(move || {
                    (w..spec.instances)
                        .step_by(workers)
                        .map(|i| {
                            let solved = instance_images(config.seed, i, spec)
                                .and_then(|images| solve_instance(config, spec, cost, &images));
                            (i, solved)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("bench worker panicked") {
                results[i] = Some(r);
            }
        }
    });

    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    let mut all = Vec::with_capacity(spec.instances);
    for (i, r) in results.into_iter().enumerate() {
        let solves = r.expect("every instance assigned")?;
        csv_rows(i, &solves, &mut csv);
        all.push(solves);
    }

    let mut summary = Summary::new();
    summary
        .add("command", "bench")
        .add("problem", format!("{:?}", spec.problem).to_lowercase())
        .add("instances", spec.instances)
        .add("seed", config.seed);
    let mut exhausted = 0;
    for &eps in &spec.targets {
        for &method in methods(spec.problem) {
            let counts: Vec<Option<usize>> = all
                .iter()
                .flat_map(|solves| solves.iter().filter(|s| s.method == method && s.eps == eps))
                .map(|s| s.iterations)
                .collect();
            let done: Vec<f64> = counts.iter().flatten().map(|&k| k as f64).collect();
            exhausted += counts.len() - done.len();
            let (mean, std) = mean_std(&done);
            let key = format!("{}.eps_{eps}", method.name());
            summary
                .add(
                    format!("{key}.converged"),
                    format!("{}/{}", done.len(), counts.len()),
                )
                .add(format!("{key}.iterations_mean"), mean)
                .add(format!("{key}.iterations_std"), std)
                .add(
                    format!("{key}.iterations"),
                    counts
                        .iter()
                        .map(|c| c.map_or("-".to_string(), |k| k.to_string()))
                        .collect::<Vec<_>>()
                        .join(" "),
                );
        }
    }

    create_dir(&config.out)?;
    let csv_path = config.out.join("bench.csv");
    fs::write(&csv_path, csv).map_err(|e| CliError::io(&csv_path, e))?;
    summary.write(&config.out.join("bench_summary.txt"))?;
    if exhausted > 0 {
        return Err(CliError::NotReached(format!(
            "{exhausted} solves hit the iteration limit of {}",
            config.max_iters
        )));
    }
    Ok(summary)
}
