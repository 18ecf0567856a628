//! Entropy-regularized Wasserstein barycenters.
//!
//! The dual of `min_q sum_l w_l W_gamma(p_l, q)` over `m` measures is
//!
//! ```text
//! phi(u, v) = gamma sum_l w_l (ln 1^T B_l(u_l, v_l) 1 - <u_l, p_l>) - m gamma
//! subject to sum_l w_l v_l = 0,
//! ```
//!
//! stored flat as `[u_1, .., u_m, v_1, .., v_m]`. Gradients are projected onto
//! the constraint subspace so every dual sequence stays feasible.

use std::ops::Range;

use crate::aam::{BlockObjective, Decrease, StepOutcome};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::logmath::{
    dot, l1_distance, log_col_sums, log_marginals, log_row_sums, log_total, neg_entropy,
    normalized_plan, sqnorm, CostMatrix, Histogram, LogKernel,
};
use crate::ot::{dot_abs, mass_ratio_series, OtStop, TraceRow, PRECISE_DECREASE_RATIO};
use crate::pdaam::{pdaam_step, DualMethod, PrimalDualProblem, PrimalDualState};

#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    n: usize,
    measures: Vec<Histogram>,
    costs: Vec<CostMatrix>,
    weights: Vec<f64>,
    gamma: f64,
    kernels: Vec<LogKernel>,
}

impl BarycenterProblem {
    /// Weights must be positive; they are rescaled to sum to one.
    pub fn new(
        measures: Vec<Histogram>,
        costs: Vec<CostMatrix>,
        weights: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let m = measures.len();
        if m == 0 {
            return Err(Error::Empty);
        }
        for len in [costs.len(), weights.len()] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: len,
                });
            }
        }
        let n = measures[0].len();
        for (p, c) in measures.iter().zip(&costs) {
            for len in [p.len(), c.n()] {
                if len != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: len,
                    });
                }
            }
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(
                "barycenter weights must be positive; drop zero-weight measures".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        let kernels = costs
            .iter()
            .map(|c| LogKernel::new(c, gamma))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            measures,
            costs,
            weights,
            gamma,
            kernels,
        })
    }

    /// Same cost matrix for every measure.
    pub fn with_shared_cost(
        measures: Vec<Histogram>,
        cost: CostMatrix,
        weights: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let costs = vec![cost; measures.len()];
        Self::new(measures, costs, weights, gamma)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.measures.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measures(&self) -> &[Histogram] {
        &self.measures
    }

    pub fn costs(&self) -> &[CostMatrix] {
        &self.costs
    }

    pub fn require_positive_measures(&self) -> Result<()> {
        for (l, p) in self.measures.iter().enumerate() {
            if let Some(i) = p.first_zero() {
                return Err(Error::ZeroMarginal {
                    index: l * self.n + i,
                });
            }
        }
        Ok(())
    }

    fn u<'a>(&self, flat: &'a [f64], l: usize) -> &'a [f64] {
        &flat[l * self.n..(l + 1) * self.n]
    }

    fn v<'a>(&self, flat: &'a [f64], l: usize) -> &'a [f64] {
        let off = self.m() * self.n;
        &flat[off + l * self.n..off + (l + 1) * self.n]
    }

    /// Primal objective `sum_l w_l (<C_l, pi_l> + gamma <pi_l, ln pi_l>) + m gamma`.
    /// The constant matches the `- m gamma` of the dual so that the gap
    /// vanishes at the optimum.
    pub fn primal_objective(&self, plans: &[f64]) -> f64 {
        let nn = self.n * self.n;
        let body: f64 = plans
            .chunks(nn)
            .zip(&self.costs)
            .zip(&self.weights)
            .map(|((pi, c), w)| w * (c.dot(pi) + self.gamma * neg_entropy(pi)))
            .sum();
        body + self.m() as f64 * self.gamma
    }

    /// `sum_l w_l ||q_l - q_bar||_1 + sum_l w_l ||pi_l 1 - p_l||_1` with `q_l`
    /// the column marginals and `q_bar` their weighted mean.
    pub fn feasibility_l1(&self, plans: &[f64]) -> f64 {
        let nn = self.n * self.n;
        let cols: Vec<Vec<f64>> = plans.chunks(nn).map(|pi| col_sums(pi, self.n)).collect();
        let q_bar = weighted_mean(&cols, &self.weights);
        let mut total = 0.0;
        for ((pi, q), (w, p)) in plans
            .chunks(nn)
            .zip(&cols)
            .zip(self.weights.iter().zip(&self.measures))
        {
            let rows: Vec<f64> = pi.chunks(self.n).map(|r| r.iter().sum()).collect();
            total += w * (l1_distance(q, &q_bar) + l1_distance(&rows, p.weights()));
        }
        total
    }
}

fn col_sums(plan: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for row in plan.chunks(n) {
        out.iter_mut().zip(row).for_each(|(o, x)| *o += x);
    }
    out
}

fn weighted_mean(vectors: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for (vec, w) in vectors.iter().zip(weights) {
        out.iter_mut().zip(vec).for_each(|(o, x)| *o += w * x);
    }
    out
}

/// Dual point; `v` satisfies `sum_l w_l v_l = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterDualPoint {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl BarycenterDualPoint {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            u: vec![vec![0.0; n]; m],
            v: vec![vec![0.0; n]; m],
        }
    }

    pub fn from_flat(flat: &[f64], m: usize, n: usize) -> Self {
        let (u, v) = flat.split_at(m * n);
        Self {
            u: u.chunks(n).map(<[f64]>::to_vec).collect(),
            v: v.chunks(n).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.u.iter().chain(&self.v).flatten().copied().collect()
    }

    /// `max_j |sum_l w_l v_l[j]|`.
    pub fn constraint_violation(&self, weights: &[f64]) -> f64 {
        weighted_mean(&self.v, weights)
            .iter()
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Removes the component of the `v` part of `flat` that violates
/// `sum_l w_l v_l = 0`, i.e. subtracts `w_l (sum_j w_j v_j) / sum_j w_j^2`.
pub fn project_v(weights: &[f64], n: usize, flat: &mut [f64]) {
    let m = weights.len();
    let off = m * n;
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    let mut mean = vec![0.0; n];
    for (l, w) in weights.iter().enumerate() {
        for (s, x) in mean.iter_mut().zip(&flat[off + l * n..off + (l + 1) * n]) {
            *s += w * x;
        }
    }
    for (l, w) in weights.iter().enumerate() {
        for (x, s) in flat[off + l * n..off + (l + 1) * n].iter_mut().zip(&mean) {
            *x -= w * s / w2;
        }
    }
}

pub fn wb_dual_value(prob: &BarycenterProblem, p: &BarycenterDualPoint) -> f64 {
    prob.value(&p.to_flat())
}

/// Gradient with the `v` part projected onto the constraint subspace.
pub fn wb_dual_gradient(
    prob: &BarycenterProblem,
    p: &BarycenterDualPoint,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let g = prob.gradient(&p.to_flat());
    let q = BarycenterDualPoint::from_flat(&g, prob.m(), prob.n);
    (q.u, q.v)
}

/// `u_l + ln p_l - ln(B_l 1)` for every `l`.
pub fn ibp_u_update(
    prob: &BarycenterProblem,
    p: &BarycenterDualPoint,
) -> Result<BarycenterDualPoint> {
    prob.require_positive_measures()?;
    let flat = prob.block_minimize(&p.to_flat(), 0);
    Ok(BarycenterDualPoint::from_flat(&flat, prob.m(), prob.n))
}

/// `v_l + sum_j w_j ln(B_j^T 1) - ln(B_l^T 1)` for every `l`.
pub fn ibp_v_update(
    prob: &BarycenterProblem,
    p: &BarycenterDualPoint,
) -> Result<BarycenterDualPoint> {
    let flat = prob.block_minimize(&p.to_flat(), 1);
    Ok(BarycenterDualPoint::from_flat(&flat, prob.m(), prob.n))
}

impl BlockObjective for BarycenterProblem {
    fn dim(&self) -> usize {
        2 * self.m() * self.n
    }

    fn num_blocks(&self) -> usize {
        2
    }

    fn block(&self, i: usize) -> Range<usize> {
        let half = self.m() * self.n;
        if i == 0 {
            0..half
        } else {
            half..2 * half
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let body: f64 = (0..self.m())
            .map(|l| {
                let (u, v) = (self.u(x, l), self.v(x, l));
                let total = log_total(&self.kernels[l], u, v);
                self.weights[l] * (total - dot(u, self.measures[l].weights()))
            })
            .sum();
        self.gamma * body - self.m() as f64 * self.gamma
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (m, n, g) = (self.m(), self.n, self.gamma);
        let mut grad = vec![0.0; x.len()];
        let mut body = 0.0;
        for l in 0..m {
            let (u, v) = (self.u(x, l), self.v(x, l));
            let lm = log_marginals(&self.kernels[l], u, v);
            let w = self.weights[l];
            body += w * (lm.total - dot(u, self.measures[l].weights()));
            for ((gi, lr), pi) in grad[l * n..(l + 1) * n]
                .iter_mut()
                .zip(&lm.rows)
                .zip(self.measures[l].weights())
            {
                *gi = g * w * ((lr - lm.total).exp() - pi);
            }
            for (gj, lc) in grad[(m + l) * n..(m + l + 1) * n].iter_mut().zip(&lm.cols) {
                *gj = g * w * (lc - lm.total).exp();
            }
        }
        project_v(&self.weights, n, &mut grad);
        (g * body - m as f64 * g, grad)
    }

    fn decrease(&self, from: &[f64], f_from: f64, to: &[f64], f_to: f64) -> Decrease {
        let plain = Decrease::by_subtraction(f_from, f_to);
        if plain.value.abs() > PRECISE_DECREASE_RATIO * (f_from.abs() + f_to.abs()) {
            return plain;
        }
        // Off the constraint subspace the value moves to first order, so
        // rounding drift in the step must not count as progress or loss.
        let mut d: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        project_v(&self.weights, self.n, &mut d);
        let (mut value, mut mag) = (0.0, 0.0);
        for l in 0..self.m() {
            let (u, v) = (self.u(from, l), self.v(from, l));
            let (du, dv) = (self.u(&d, l), self.v(&d, l));
            let Some((log_ratio, abs)) = mass_ratio_series(&self.kernels[l], u, v, du, dv) else {
                return plain;
            };
            let p = self.measures[l].weights();
            let w = self.weights[l];
            value += w * (dot(du, p) - log_ratio);
            mag += w * (abs + dot_abs(du, p));
        }
        Decrease {
            value: self.gamma * value,
            error: 64.0 * f64::EPSILON * self.gamma * mag,
        }
    }

    /// Block 0: every `u_l` matches its row marginal to `p_l`. Block 1: all
    /// column marginals are set to their weighted geometric mean, which keeps
    /// `sum_l w_l v_l` unchanged.
    fn block_minimize(&self, x: &[f64], i: usize) -> Vec<f64> {
        let (m, n) = (self.m(), self.n);
        let mut out = x.to_vec();
        if i == 0 {
            for l in 0..m {
                let rows = log_row_sums(&self.kernels[l], self.u(x, l), self.v(x, l));
                for ((o, lr), pi) in out[l * n..(l + 1) * n]
                    .iter_mut()
                    .zip(rows)
                    .zip(self.measures[l].weights())
                {
                    *o += pi.ln() - lr;
                }
            }
        } else {
            let cols: Vec<Vec<f64>> = (0..m)
                .map(|l| log_col_sums(&self.kernels[l], self.u(x, l), self.v(x, l)))
                .collect();
            let mean = weighted_mean(&cols, &self.weights);
            for (l, col) in cols.iter().enumerate() {
                for ((o, a), b) in out[(m + l) * n..(m + l + 1) * n]
                    .iter_mut()
                    .zip(&mean)
                    .zip(col)
                {
                    *o += a - b;
                }
            }
        }
        out
    }
}

/// Primal variables are the `m` plans stacked; the constraints are
/// `pi_l 1 = p_l` and `pi_l^T 1 - sum_j w_j pi_j^T 1 = 0`.
impl PrimalDualProblem for BarycenterProblem {
    fn primal_dim(&self) -> usize {
        self.m() * self.n * self.n
    }

    fn primal_from_dual(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.primal_dim());
        for l in 0..self.m() {
            let (u, v) = (self.u(lambda, l), self.v(lambda, l));
            let total = log_total(&self.kernels[l], u, v);
            out.extend(normalized_plan(&self.kernels[l], u, v, total));
        }
        out
    }

    fn primal_value(&self, x: &[f64]) -> f64 {
        self.primal_objective(x)
    }

    fn constraint_apply(&self, x: &[f64]) -> Vec<f64> {
        let (n, nn) = (self.n, self.n * self.n);
        let mut out = Vec::with_capacity(2 * self.m() * n);
        for pi in x.chunks(nn) {
            out.extend(pi.chunks(n).map(|r| r.iter().sum::<f64>()));
        }
        let cols: Vec<Vec<f64>> = x.chunks(nn).map(|pi| col_sums(pi, n)).collect();
        let mean = weighted_mean(&cols, &self.weights);
        for col in &cols {
            out.extend(col.iter().zip(&mean).map(|(a, b)| a - b));
        }
        out
    }

    fn constraint_rhs(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .measures
            .iter()
            .flat_map(|p| p.weights().iter().copied())
            .collect();
        out.resize(2 * self.m() * self.n, 0.0);
        out
    }
}

/// `sum_l w_l pi_l^T 1`, renormalized.
pub fn barycenter_estimate(plans: &[Vec<f64>], weights: &[f64]) -> Result<Histogram> {
    let first = plans.first().ok_or(Error::Empty)?;
    let n = (first.len() as f64).sqrt().round() as usize;
    let cols: Vec<Vec<f64>> = plans.iter().map(|pi| col_sums(pi, n)).collect();
    Histogram::new(weighted_mean(&cols, weights))
}

#[derive(Debug, Clone)]
pub struct BarycenterRun {
    pub point: BarycenterDualPoint,
    /// One row-major plan per measure: `x(u, v)` for IBP, the primal average
    /// for the accelerated method.
    pub plans: Vec<Vec<f64>>,
    pub barycenter: Histogram,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

impl BarycenterRun {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iteration)
    }
}

fn finish_run(
    prob: &BarycenterProblem,
    flat: &[f64],
    plans: Vec<f64>,
    trace: Vec<TraceRow>,
    converged: bool,
) -> Result<BarycenterRun> {
    let nn = prob.n * prob.n;
    let plans: Vec<Vec<f64>> = plans.chunks(nn).map(<[f64]>::to_vec).collect();
    Ok(BarycenterRun {
        point: BarycenterDualPoint::from_flat(flat, prob.m(), prob.n),
        barycenter: barycenter_estimate(&plans, &prob.weights)?,
        plans,
        trace,
        converged,
    })
}

/// Iterative Bregman projections; each half-step is one iteration.
pub fn run_ibp(prob: &BarycenterProblem, stop: OtStop) -> Result<BarycenterRun> {
    prob.require_positive_measures()?;
    let clock = Stopwatch::start();
    let mut x = vec![0.0; prob.dim()];
    let mut trace = Vec::new();
    let mut plans = prob.primal_from_dual(&x);
    let mut converged = false;
    for k in 1..=stop.max_iters {
        x = prob.block_minimize(&x, (k + 1) % 2);
        let dual = prob.value(&x);
        plans = prob.primal_from_dual(&x);
        let row = TraceRow {
            iteration: k,
            seconds: clock.seconds(),
            dual,
            feas_l1: prob.feasibility_l1(&plans),
            gap: prob.primal_objective(&plans) + dual,
            lipschitz: f64::NAN,
            accumulator: f64::NAN,
        };
        trace.push(row);
        if row.feas_l1 <= stop.feasibility && row.gap.abs() <= stop.gap {
            converged = true;
            break;
        }
    }
    finish_run(prob, &x, plans, trace, converged)
}

/// One accelerated IBP iteration, followed by re-projection of the dual
/// points onto the constraint subspace to remove rounding drift.
pub fn accelerated_ibp_step(
    prob: &BarycenterProblem,
    state: &mut PrimalDualState,
) -> Result<StepOutcome> {
    let outcome = pdaam_step(prob, state, DualMethod::Adaptive)?;
    project_v(&prob.weights, prob.n, &mut state.inner.x);
    project_v(&prob.weights, prob.n, &mut state.inner.momentum);
    Ok(outcome)
}

pub fn run_accelerated_ibp(
    prob: &BarycenterProblem,
    l0: f64,
    stop: OtStop,
) -> Result<BarycenterRun> {
    prob.require_positive_measures()?;
    let clock = Stopwatch::start();
    let mut state = PrimalDualState::from_problem(prob, l0);
    let mut trace = Vec::new();
    let mut converged = false;
    while state.inner.iteration < stop.max_iters {
        let outcome = accelerated_ibp_step(prob, &mut state)?;
        let stationary = outcome == StepOutcome::Stationary;
        if stationary {
            state.inner.iteration += 1;
        }
        let dual = prob.value(&state.inner.x);
        let row = TraceRow {
            iteration: state.inner.iteration,
            seconds: clock.seconds(),
            dual,
            feas_l1: prob.feasibility_l1(&state.x_hat),
            gap: prob.primal_objective(&state.x_hat) + dual,
            lipschitz: state.inner.lipschitz,
            accumulator: state.inner.accumulator,
        };
        trace.push(row);
        if row.feas_l1 <= stop.feasibility && row.gap.abs() <= stop.gap {
            converged = true;
            break;
        }
        if stationary {
            break;
        }
    }
    let x = state.inner.x.clone();
    finish_run(prob, &x, state.x_hat, trace, converged)
}

/// `||sum_l w_l v_l||_2` of a flat dual vector.
pub fn flat_constraint_violation(weights: &[f64], n: usize, flat: &[f64]) -> f64 {
    let off = weights.len() * n;
    let mut mean = vec![0.0; n];
    for (l, w) in weights.iter().enumerate() {
        for (s, x) in mean.iter_mut().zip(&flat[off + l * n..off + (l + 1) * n]) {
            *s += w * x;
        }
    }
    sqnorm(&mean).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(w: &[f64]) -> Histogram {
        Histogram::new(w.to_vec()).unwrap()
    }

    #[test]
    fn dual_value_example() {
        let u2 = Histogram::uniform(2).unwrap();
        let p = BarycenterProblem::with_shared_cost(
            vec![u2.clone(), u2],
            CostMatrix::zeros(2),
            vec![0.5, 0.5],
            1.0,
        )
        .unwrap();
        let v = wb_dual_value(&p, &BarycenterDualPoint::zeros(2, 2));
        assert!((v - (4f64.ln() - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_cost_sweep_from_zeros() {
        let n = 3;
        let un = Histogram::uniform(n).unwrap();
        let p = BarycenterProblem::with_shared_cost(
            vec![un.clone(), un],
            CostMatrix::zeros(n),
            vec![0.3, 0.7],
            1.0,
        )
        .unwrap();
        let q = ibp_u_update(&p, &BarycenterDualPoint::zeros(2, n)).unwrap();
        for ul in &q.u {
            for x in ul {
                assert!((x + 2.0 * (n as f64).ln()).abs() < 1e-14);
            }
        }
        let q2 = ibp_v_update(&p, &q).unwrap();
        for vl in &q2.v {
            assert!(vl.iter().all(|x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn zero_cost_barycenter_is_uniform() {
        // the entropic term alone selects the uniform barycenter
        let p = BarycenterProblem::with_shared_cost(
            vec![hist(&[0.7, 0.2, 0.1]), hist(&[0.1, 0.1, 0.8])],
            CostMatrix::zeros(3),
            vec![0.5, 0.5],
            1.0,
        )
        .unwrap();
        let run = run_ibp(&p, OtStop::new(100, 1e-13)).unwrap();
        assert!(run.converged);
        for q in run.barycenter.weights() {
            assert!((q - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sharp_kernel_gives_geometric_mean_after_one_sweep() {
        let n = 3;
        let cost: Vec<f64> = (0..n * n)
            .map(|k| if k % (n + 1) == 0 { 0.0 } else { 50.0 })
            .collect();
        let p1 = [0.6, 0.3, 0.1];
        let p2 = [0.2, 0.2, 0.6];
        let w = [0.25, 0.75];
        let p = BarycenterProblem::with_shared_cost(
            vec![hist(&p1), hist(&p2)],
            CostMatrix::new(n, cost).unwrap(),
            w.to_vec(),
            1.0,
        )
        .unwrap();
        let q = ibp_u_update(&p, &BarycenterDualPoint::zeros(2, n)).unwrap();
        let q = ibp_v_update(&p, &q).unwrap();
        let plans = p.primal_from_dual(&q.to_flat());
        let bary = barycenter_estimate(
            &plans.chunks(n * n).map(<[f64]>::to_vec).collect::<Vec<_>>(),
            p.weights(),
        )
        .unwrap();
        let geo: Vec<f64> = (0..n)
            .map(|i| p1[i].powf(w[0]) * p2[i].powf(w[1]))
            .collect();
        let s: f64 = geo.iter().sum();
        for (b, g) in bary.weights().iter().zip(&geo) {
            assert!((b - g / s).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_instance_is_stationary_at_zero() {
        let un = Histogram::uniform(3).unwrap();
        let p = BarycenterProblem::with_shared_cost(
            vec![un.clone(), un.clone(), un],
            CostMatrix::zeros(3),
            vec![1.0, 1.0, 1.0],
            0.5,
        )
        .unwrap();
        let g = p.gradient(&vec![0.0; p.dim()]);
        assert!(sqnorm(&g) < 1e-28);
        let run = run_accelerated_ibp(&p, 1.0, OtStop::new(10, 1e-12)).unwrap();
        assert!(run.converged);
        assert_eq!(run.iterations(), 1);
    }

    #[test]
    fn estimate_of_identical_plans_is_their_marginal() {
        let plan = vec![0.1, 0.2, 0.3, 0.4];
        let b = barycenter_estimate(&[plan.clone(), plan], &[0.4, 0.6]).unwrap();
        assert!((b.weights()[0] - 0.4).abs() < 1e-15);
        assert!((b.weights()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_weights() {
        let un = Histogram::uniform(2).unwrap();
        let r = BarycenterProblem::with_shared_cost(
            vec![un.clone(), un],
            CostMatrix::zeros(2),
            vec![1.0, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
