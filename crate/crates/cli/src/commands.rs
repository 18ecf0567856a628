//! `ot`, `barycenter` and `gradcheck`.

use std::path::{Path, PathBuf};

use otaccel::aam::BlockObjective;
use otaccel::barycenter::{project_v, run_accelerated_ibp, run_ibp, BarycenterProblem};
use otaccel::instances::{grid_cost, random_cost, random_histogram};
use otaccel::logmath::smooth_marginals;
use otaccel::oracle::finite_difference_gradient;
use otaccel::ot::{
    approximate_ot, approximation_parameters, ot_dual_gradient, ot_dual_value, run_method,
    ApproxOptions, OtStop,
};
use otaccel::{CostMatrix, EntropicOTProblem, Histogram, OTDualPoint, Stopwatch, TraceRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{GammaSpec, Method, Metric, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{
    create_dir, load_cost, load_histogram, write_matrix, write_trace, write_vector,
    HistogramFormat, Summary,
};

/// Where the ground cost comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSource {
    File(PathBuf),
    /// Pixel grid of a square image; the side is inferred from `N`.
    Grid(Metric),
}

impl CostSource {
    pub fn resolve(&self, n: usize) -> CliResult<CostMatrix> {
        let cost = match self {
            CostSource::File(p) => load_cost(p)?,
            CostSource::Grid(metric) => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(CliError::Config(format!(
                        "N = {n} is not a square image size; pass --cost"
                    )));
                }
                grid_cost(side, (*metric).into())?
            }
        };
        if cost.n() != n {
            return Err(CliError::Config(format!(
                "cost matrix is {0}x{0} but the histograms have {n} entries",
                cost.n()
            )));
        }
        Ok(cost)
    }
}

fn load(path: &Path, config: &RunConfig) -> CliResult<Histogram> {
    load_histogram(path, HistogramFormat::from_path(path), config.smooth)
}

fn final_row(trace: &[TraceRow]) -> Option<&TraceRow> {
    trace.last()
}

fn add_row(summary: &mut Summary, row: Option<&TraceRow>) {
    if let Some(row) = row {
        summary
            .add("dual", row.dual)
            .add("feas_l1", row.feas_l1)
            .add("gap", row.gap);
    }
}

/// Solves an OT problem and writes `trace.csv`, `plan.csv` and
/// `summary.txt` into `config.out`. Returns the summary.
///
/// With `--gamma auto` the result is an `eps`-approximate unregularized plan;
/// with a fixed `gamma` it is the regularized solve stopped at certificates
/// below `eps`.
pub fn cmd_ot(
    config: &RunConfig,
    r_path: &Path,
    c_path: &Path,
    cost: &CostSource,
) -> CliResult<Summary> {
    config.validate()?;
    let method = config.method_or(Method::AamSinkhorn);
    let ot_method = method.ot()?;
    let r = load(r_path, config)?;
    let c = load(c_path, config)?;
    if r.len() != c.len() {
        return Err(CliError::Config(format!(
            "marginals have {} and {} entries",
            r.len(),
            c.len()
        )));
    }
    let n = r.len();
    let cost = cost.resolve(n)?;
    create_dir(&config.out)?;
    let clock = Stopwatch::start();
    let mut summary = Summary::new();
    summary
        .add("command", "ot")
        .add("method", method.name())
        .add("n", n);

    let (trace, plan, converged) = match config.gamma {
        GammaSpec::Auto => {
            let opts = ApproxOptions {
                method: ot_method,
                max_iters: config.max_iters,
                l0: config.l0,
                check_interval: config.check_interval,
            };
            let res = approximate_ot(&cost, &r, &c, config.eps, opts)?;
            summary
                .add("gamma", res.gamma)
                .add("eps", config.eps)
                .add("eps_prime", res.eps_prime);
            (res.trace, res.plan, true)
        }
        GammaSpec::Fixed(gamma) => {
            let prob = EntropicOTProblem::new(cost.clone(), gamma, r.clone(), c.clone())?;
            let run = run_method(
                &prob,
                ot_method,
                config.l0,
                OtStop::new(config.max_iters, config.eps),
            )?;
            summary.add("gamma", gamma).add("tolerance", config.eps);
            (run.trace, run.plan, run.converged)
        }
    };
    let seconds = clock.seconds();
    summary
        .add("status", if converged { "converged" } else { "exhausted" })
        .add("iterations", trace.last().map_or(0, |t| t.iteration))
        .add("seconds", seconds)
        .add("cost", cost.dot(plan.entries()));
    add_row(&mut summary, final_row(&trace));
    summary.add(
        "plan_marginal_error_l1",
        plan.marginal_error_l1(r.weights(), c.weights()),
    );

    write_trace(&config.out.join("trace.csv"), &trace)?;
    write_matrix(&config.out.join("plan.csv"), n, plan.entries())?;
    summary.write(&config.out.join("summary.txt"))?;
    if converged {
        Ok(summary)
    } else {
        Err(CliError::NotReached(format!(
            "no convergence within {} iterations; partial results in {}",
            config.max_iters,
            config.out.display()
        )))
    }
}

/// Parses `"0.2,0.3,0.5"`. An empty list means uniform weights. Weights
/// that do not sum to one are rescaled, with a warning on stderr.
pub fn parse_weights(spec: Option<&str>, m: usize) -> CliResult<Vec<f64>> {
    let Some(spec) = spec else {
        return Ok(vec![1.0 / m as f64; m]);
    };
    let w = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad weight {s:?}")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if w.len() != m {
        return Err(CliError::Config(format!(
            "{} weights for {m} measures",
            w.len()
        )));
    }
    if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(CliError::Config("weights must be positive".into()));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        eprintln!("warning: weights sum to {total}; rescaling to 1");
    }
    Ok(w.iter().map(|x| x / total).collect())
}

/// Regularization and smoothing for the barycenter under `--gamma auto`:
/// the OT rule for `gamma`, and the same `eps'` smoothing of every measure.
pub fn barycenter_parameters(cost: &CostMatrix, eps: f64) -> CliResult<(f64, f64)> {
    Ok(approximation_parameters(cost, eps)?)
}

/// Solves the regularized barycenter problem and writes `trace.csv`,
/// `barycenter.csv` and `summary.txt`.
pub fn cmd_barycenter(
    config: &RunConfig,
    measure_paths: &[PathBuf],
    cost: &CostSource,
    weights: Option<&str>,
) -> CliResult<Summary> {
    config.validate()?;
    let accelerated = config.method_or(Method::AamIbp).barycenter_accelerated()?;
    if measure_paths.is_empty() {
        return Err(CliError::Config(
            "at least one --measure is required".into(),
        ));
    }
    let mut measures = measure_paths
        .iter()
        .map(|p| load(p, config))
        .collect::<CliResult<Vec<_>>>()?;
    let n = measures[0].len();
    if let Some((p, h)) = measure_paths
        .iter()
        .zip(&measures)
        .find(|(_, h)| h.len() != n)
    {
        return Err(CliError::Config(format!(
            "{} has {} entries, expected {n}",
            p.display(),
            h.len()
        )));
    }
    let m = measures.len();
    let weights = parse_weights(weights, m)?;
    let cost = cost.resolve(n)?;
    let mut summary = Summary::new();
    summary
        .add("command", "barycenter")
        .add("method", if accelerated { "aam-ibp" } else { "ibp" })
        .add("n", n)
        .add("m", m);
    let gamma = match config.gamma {
        GammaSpec::Auto => {
            let (gamma, eps_prime) = barycenter_parameters(&cost, config.eps)?;
            measures = measures
                .iter()
                .map(|h| smooth_marginals(h, eps_prime))
                .collect::<otaccel::Result<_>>()?;
            summary.add("eps_prime", eps_prime);
            gamma
        }
        GammaSpec::Fixed(g) => g,
    };
    summary.add("gamma", gamma).add("tolerance", config.eps);
    let prob = BarycenterProblem::with_shared_cost(measures, cost, weights, gamma)?;
    create_dir(&config.out)?;
    let clock = Stopwatch::start();
    let stop = OtStop::new(config.max_iters, config.eps);
    let run = if accelerated {
        run_accelerated_ibp(&prob, config.l0, stop)?
    } else {
        run_ibp(&prob, stop)?
    };
    summary
        .add(
            "status",
            if run.converged {
                "converged"
            } else {
                "exhausted"
            },
        )
        .add("iterations", run.iterations())
        .add("seconds", clock.seconds());
    add_row(&mut summary, final_row(&run.trace));
    let q = run.barycenter.weights();
    for (l, (plan, p)) in run.plans.iter().zip(prob.measures()).enumerate() {
        let rows: Vec<f64> = plan.chunks(n).map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..n)
            .map(|j| plan.iter().skip(j).step_by(n).sum())
            .collect();
        summary
            .add(format!("measure_{l}_row_error_l1"), l1(&rows, p.weights()))
            .add(format!("measure_{l}_col_error_l1"), l1(&cols, q));
    }

    write_trace(&config.out.join("trace.csv"), &run.trace)?;
    write_vector(&config.out.join("barycenter.csv"), q)?;
    summary.write(&config.out.join("summary.txt"))?;
    if run.converged {
        Ok(summary)
    } else {
        Err(CliError::NotReached(format!(
            "no convergence within {} iterations; partial results in {}",
            config.max_iters,
            config.out.display()
        )))
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn relative_max_error(fd: &[f64], exact: &[f64]) -> f64 {
    let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let err = fd
        .iter()
        .zip(exact)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    err / scale.max(f64::MIN_POSITIVE)
}

pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Central-difference check of both dual gradients at `points` seeded random
/// points of size `n`. Fails when the relative max-norm error exceeds
/// [`GRADCHECK_TOLERANCE`].
pub fn cmd_gradcheck(config: &RunConfig, n: usize, points: usize) -> CliResult<Summary> {
    config.validate()?;
    if n < 2 || points == 0 {
        return Err(CliError::Config(
            "gradcheck needs n >= 2 and at least one point".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut worst_ot, mut worst_wb) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let gamma = rng.gen_range(0.05..1.0);
        let prob = EntropicOTProblem::new(
            random_cost(&mut rng, n),
            gamma,
            random_histogram(&mut rng, n, 0.05),
            random_histogram(&mut rng, n, 0.05),
        )?;
        let x: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (gu, gv) = ot_dual_gradient(&prob, &OTDualPoint::from_flat(&x));
        let exact: Vec<f64> = gu.into_iter().chain(gv).collect();
        let fd = finite_difference_gradient(
            |y| ot_dual_value(&prob, &OTDualPoint::from_flat(y)),
            &x,
            1e-6,
        );
        worst_ot = worst_ot.max(relative_max_error(&fd, &exact));

        let m = 3;
        let wb = BarycenterProblem::new(
            (0..m)
                .map(|_| random_histogram(&mut rng, n, 0.05))
                .collect(),
            (0..m).map(|_| random_cost(&mut rng, n)).collect(),
            (0..m).map(|_| rng.gen_range(0.2..1.0)).collect(),
            gamma,
        )?;
        let w = wb.weights().to_vec();
        let mut x: Vec<f64> = (0..wb.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        project_v(&w, n, &mut x);
        let exact = wb.gradient(&x);
        let fd = finite_difference_gradient(
            |y| {
                let mut z = y.to_vec();
                project_v(&w, n, &mut z);
                wb.value(&z)
            },
            &x,
            1e-6,
        );
        worst_wb = worst_wb.max(relative_max_error(&fd, &exact));
    }
    let mut summary = Summary::new();
    summary
        .add("command", "gradcheck")
        .add("n", n)
        .add("points", points)
        .add("ot_max_relative_error", worst_ot)
        .add("barycenter_max_relative_error", worst_wb)
        .add("tolerance", GRADCHECK_TOLERANCE);
    if worst_ot.max(worst_wb) <= GRADCHECK_TOLERANCE {
        Ok(summary)
    } else {
        Err(CliError::NotReached(summary.render()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_rescaled() {
        assert_eq!(parse_weights(None, 4).unwrap(), vec![0.25; 4]);
        assert_eq!(parse_weights(Some("1, 3"), 2).unwrap(), vec![0.25, 0.75]);
        assert!(parse_weights(Some("1"), 2).is_err());
        assert!(parse_weights(Some("1,-1"), 2).is_err());
    }

    #[test]
    fn grid_needs_square_sizes() {
        let g = CostSource::Grid(Metric::SqEuclidean);
        assert_eq!(g.resolve(16).unwrap().n(), 16);
        assert_eq!(g.resolve(6).unwrap_err().exit_code(), 3);
    }
}
