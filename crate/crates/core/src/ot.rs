//! Entropy-regularized optimal transport.
//!
//! The dual is written in the dimensionless variables `u = -y/gamma - 1/2`,
//! `v = -z/gamma - 1/2` of the constraint multipliers `(y, z)`:
//!
//! ```text
//! phi(u, v) = gamma (ln 1^T B(u,v) 1 - <u, r> - <v, c>),
//! B(u, v)_ij = exp(u_i + v_j - C_ij / gamma).
//! ```
//!
//! Dual values, primal averages and certificates do not depend on the
//! coordinates. Step sizes do: an accumulator `A` in `(u, v)` corresponds to
//! `gamma^2 A` in `(y, z)`, see [`accumulator_in_multiplier_units`].

use std::ops::Range;

use crate::aam::{BlockObjective, Decrease, StepOutcome, DEFAULT_L0};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::logmath::{
    dot, l1_distance, log_col_sums, log_marginals, log_row_sums, log_total, neg_entropy,
    normalized_plan, smooth_marginals, CostMatrix, Histogram, LogKernel,
};
use crate::pdaam::{pdaam_step, DualMethod, PrimalDualProblem, PrimalDualState};

/// Mass tolerance for [`TransportPlan`].
pub const PLAN_MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EntropicOTProblem {
    cost: CostMatrix,
    gamma: f64,
    r: Histogram,
    c: Histogram,
    kernel: LogKernel,
}

impl EntropicOTProblem {
    pub fn new(cost: CostMatrix, gamma: f64, r: Histogram, c: Histogram) -> Result<Self> {
        let n = cost.n();
        for h in [&r, &c] {
            if h.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: h.len(),
                });
            }
        }
        let kernel = LogKernel::new(&cost, gamma)?;
        Ok(Self {
            cost,
            gamma,
            r,
            c,
            kernel,
        })
    }

    pub fn n(&self) -> usize {
        self.cost.n()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn r(&self) -> &Histogram {
        &self.r
    }

    pub fn c(&self) -> &Histogram {
        &self.c
    }

    pub fn kernel(&self) -> &LogKernel {
        &self.kernel
    }

    /// Errors unless both marginals are strictly positive.
    pub fn require_positive_marginals(&self) -> Result<()> {
        if let Some(index) = self.r.first_zero() {
            return Err(Error::ZeroMarginal { index });
        }
        if let Some(j) = self.c.first_zero() {
            return Err(Error::ZeroMarginal {
                index: self.n() + j,
            });
        }
        Ok(())
    }

    /// Primal objective `<C, X> + gamma sum X ln X`.
    pub fn primal_objective(&self, plan: &[f64]) -> f64 {
        self.cost.dot(plan) + self.gamma * neg_entropy(plan)
    }

    /// Smoothness constant of `phi` in `(u, v)` coordinates: `2 gamma`,
    /// i.e. `||A||^2_{1->2} / gamma = 2 / gamma` rescaled by `gamma^2`.
    pub fn lipschitz_constant(&self) -> f64 {
        2.0 * self.gamma
    }

    fn split<'a>(&self, flat: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        flat.split_at(self.n())
    }
}

/// Decreases smaller than this fraction of the values are recomputed by
/// [`mass_ratio_series`].
pub(crate) const PRECISE_DECREASE_RATIO: f64 = 1e-6;

/// `ln(1^T B(u + du, v + dv) 1 / 1^T B(u, v) 1)` as `ln_1p` of the plan-weighted
/// sum of `expm1(du_i + dv_j)`, with the sum of absolute terms. Accurate to a
/// few ulps of the shifts rather than of the masses; `None` when the shifts
/// are too large for this form to pay off.
pub(crate) fn mass_ratio_series(
    kernel: &LogKernel,
    u: &[f64],
    v: &[f64],
    du: &[f64],
    dv: &[f64],
) -> Option<(f64, f64)> {
    let spread = |d: &[f64]| d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if spread(du) + spread(dv) > 1.0 {
        return None;
    }
    let plan = normalized_plan(kernel, u, v, log_total(kernel, u, v));
    let n = u.len();
    let (mut sum, mut abs) = (0.0, 0.0);
    for (row, dui) in plan.chunks(n).zip(du) {
        for (p, dvj) in row.iter().zip(dv) {
            let t = p * (dui + dvj).exp_m1();
            sum += t;
            abs += t.abs();
        }
    }
    Some((sum.ln_1p(), abs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OTDualPoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl OTDualPoint {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// Splits `[u; v]`.
    pub fn from_flat(flat: &[f64]) -> Self {
        let (u, v) = flat.split_at(flat.len() / 2);
        Self {
            u: u.to_vec(),
            v: v.to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.u.clone();
        out.extend_from_slice(&self.v);
        out
    }
}

/// Nonnegative row-major `N x N` matrix of total mass one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    n: usize,
    entries: Vec<f64>,
    in_polytope: bool,
}

impl TransportPlan {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        if entries.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "plan entries must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > PLAN_MASS_TOL {
            return Err(Error::InvalidParameter(format!(
                "plan must have unit mass, got {total}"
            )));
        }
        Ok(Self {
            n,
            entries,
            in_polytope: false,
        })
    }

    fn unchecked(n: usize, entries: Vec<f64>) -> Self {
        Self {
            n,
            entries,
            in_polytope: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Set only by [`round_to_polytope`].
    pub fn is_in_polytope(&self) -> bool {
        self.in_polytope
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        col_sums(&self.entries, self.n)
    }

    /// `||X 1 - r||_1 + ||X^T 1 - c||_1`.
    pub fn marginal_error_l1(&self, r: &[f64], c: &[f64]) -> f64 {
        l1_distance(&self.row_sums(), r) + l1_distance(&self.col_sums(), c)
    }
}

pub(crate) fn dot_abs(a: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(w).map(|(x, y)| (x * y).abs()).sum()
}

fn col_sums(entries: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for row in entries.chunks(n) {
        for (o, x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
    out
}

pub fn ot_dual_value(prob: &EntropicOTProblem, p: &OTDualPoint) -> f64 {
    let total = log_total(&prob.kernel, &p.u, &p.v);
    prob.gamma * (total - dot(&p.u, prob.r.weights()) - dot(&p.v, prob.c.weights()))
}

/// `(gamma (B1/S - r), gamma (B^T 1/S - c))` with `S = 1^T B 1`.
pub fn ot_dual_gradient(prob: &EntropicOTProblem, p: &OTDualPoint) -> (Vec<f64>, Vec<f64>) {
    let m = log_marginals(&prob.kernel, &p.u, &p.v);
    let g = prob.gamma;
    let gu = m
        .rows
        .iter()
        .zip(prob.r.weights())
        .map(|(lr, ri)| g * ((lr - m.total).exp() - ri))
        .collect();
    let gv = m
        .cols
        .iter()
        .zip(prob.c.weights())
        .map(|(lc, cj)| g * ((lc - m.total).exp() - cj))
        .collect();
    (gu, gv)
}

/// `u + ln r - ln(B(u, v) 1)`: exact minimizer of `phi` over `u`.
pub fn sinkhorn_u_update(prob: &EntropicOTProblem, p: &OTDualPoint) -> Result<OTDualPoint> {
    if let Some(index) = prob.r.first_zero() {
        return Err(Error::ZeroMarginal { index });
    }
    Ok(OTDualPoint {
        u: u_update(prob, &p.u, &p.v),
        v: p.v.clone(),
    })
}

/// `v + ln c - ln(B(u, v)^T 1)`: exact minimizer of `phi` over `v`.
pub fn sinkhorn_v_update(prob: &EntropicOTProblem, p: &OTDualPoint) -> Result<OTDualPoint> {
    if let Some(j) = prob.c.first_zero() {
        return Err(Error::ZeroMarginal {
            index: prob.n() + j,
        });
    }
    Ok(OTDualPoint {
        u: p.u.clone(),
        v: v_update(prob, &p.u, &p.v),
    })
}

fn u_update(prob: &EntropicOTProblem, u: &[f64], v: &[f64]) -> Vec<f64> {
    log_row_sums(&prob.kernel, u, v)
        .iter()
        .zip(u)
        .zip(prob.r.weights())
        .map(|((lr, ui), ri)| ui + ri.ln() - lr)
        .collect()
}

fn v_update(prob: &EntropicOTProblem, u: &[f64], v: &[f64]) -> Vec<f64> {
    log_col_sums(&prob.kernel, u, v)
        .iter()
        .zip(v)
        .zip(prob.c.weights())
        .map(|((lc, vj), cj)| vj + cj.ln() - lc)
        .collect()
}

/// `x(u, v) = B(u, v) / 1^T B 1`.
pub fn primal_from_dual(prob: &EntropicOTProblem, p: &OTDualPoint) -> TransportPlan {
    let total = log_total(&prob.kernel, &p.u, &p.v);
    TransportPlan::unchecked(prob.n(), normalized_plan(&prob.kernel, &p.u, &p.v, total))
}

impl BlockObjective for EntropicOTProblem {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn num_blocks(&self) -> usize {
        2
    }

    fn block(&self, i: usize) -> Range<usize> {
        let n = self.n();
        if i == 0 {
            0..n
        } else {
            n..2 * n
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (u, v) = self.split(x);
        let total = log_total(&self.kernel, u, v);
        self.gamma * (total - dot(u, self.r.weights()) - dot(v, self.c.weights()))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (u, v) = self.split(x);
        let m = log_marginals(&self.kernel, u, v);
        let g = self.gamma;
        let value = g * (m.total - dot(u, self.r.weights()) - dot(v, self.c.weights()));
        let mut grad = Vec::with_capacity(x.len());
        grad.extend(
            m.rows
                .iter()
                .zip(self.r.weights())
                .map(|(lr, ri)| g * ((lr - m.total).exp() - ri)),
        );
        grad.extend(
            m.cols
                .iter()
                .zip(self.c.weights())
                .map(|(lc, cj)| g * ((lc - m.total).exp() - cj)),
        );
        (value, grad)
    }

    fn decrease(&self, from: &[f64], f_from: f64, to: &[f64], f_to: f64) -> Decrease {
        let plain = Decrease::by_subtraction(f_from, f_to);
        if plain.value.abs() > PRECISE_DECREASE_RATIO * (f_from.abs() + f_to.abs()) {
            return plain;
        }
        let (u, v) = self.split(from);
        let (u2, v2) = self.split(to);
        let du: Vec<f64> = u2.iter().zip(u).map(|(a, b)| a - b).collect();
        let dv: Vec<f64> = v2.iter().zip(v).map(|(a, b)| a - b).collect();
        let Some((log_ratio, abs)) = mass_ratio_series(&self.kernel, u, v, &du, &dv) else {
            return plain;
        };
        let lin_u = dot(&du, self.r.weights());
        let lin_v = dot(&dv, self.c.weights());
        let mag = abs + dot_abs(&du, self.r.weights()) + dot_abs(&dv, self.c.weights());
        Decrease {
            value: self.gamma * (lin_u + lin_v - log_ratio),
            error: 64.0 * f64::EPSILON * self.gamma * mag,
        }
    }

    /// Sinkhorn half-steps. Marginals must be strictly positive; callers go
    /// through [`EntropicOTProblem::require_positive_marginals`].
    fn block_minimize(&self, x: &[f64], i: usize) -> Vec<f64> {
        let (u, v) = self.split(x);
        let mut out = Vec::with_capacity(x.len());
        if i == 0 {
            out.extend(u_update(self, u, v));
            out.extend_from_slice(v);
        } else {
            out.extend_from_slice(u);
            out.extend(v_update(self, u, v));
        }
        out
    }
}

/// The linear constraints are `A X = (X 1, X^T 1) = (r, c)` over the set of
/// mass-one nonnegative plans. In `(u, v)` coordinates the dual gradient is
/// `-gamma (b - A x(lambda))`.
impl PrimalDualProblem for EntropicOTProblem {
    fn primal_dim(&self) -> usize {
        self.n() * self.n()
    }

    fn primal_from_dual(&self, lambda: &[f64]) -> Vec<f64> {
        let (u, v) = self.split(lambda);
        let total = log_total(&self.kernel, u, v);
        normalized_plan(&self.kernel, u, v, total)
    }

    fn primal_value(&self, x: &[f64]) -> f64 {
        self.primal_objective(x)
    }

    fn constraint_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out: Vec<f64> = x.chunks(n).map(|row| row.iter().sum()).collect();
        out.extend(col_sums(x, n));
        out
    }

    fn constraint_rhs(&self) -> Vec<f64> {
        let mut out = self.r.weights().to_vec();
        out.extend_from_slice(self.c.weights());
        out
    }
}

/// Altschuler-Weed-Rigollet rounding onto `U(r, c)`.
///
/// Rows are scaled down to at most `r`, then columns to at most `c`, and the
/// missing mass is added back as a rank-one correction. The output is moved
/// at most `2 (||X1 - r||_1 + ||X^T 1 - c||_1)` in l1.
pub fn round_to_polytope(x: &TransportPlan, r: &Histogram, c: &Histogram) -> Result<TransportPlan> {
    let n = x.n;
    for h in [r, c] {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.len(),
            });
        }
    }
    let mut out = x.entries.clone();
    for ((row, rs), ri) in out.chunks_mut(n).zip(x.row_sums()).zip(r.weights()) {
        if rs > 0.0 {
            let s = (ri / rs).min(1.0);
            row.iter_mut().for_each(|e| *e *= s);
        }
    }
    let scale: Vec<f64> = col_sums(&out, n)
        .iter()
        .zip(c.weights())
        .map(|(cs, cj)| if *cs > 0.0 { (cj / cs).min(1.0) } else { 1.0 })
        .collect();
    for row in out.chunks_mut(n) {
        row.iter_mut().zip(&scale).for_each(|(e, s)| *e *= s);
    }
    let err_r: Vec<f64> = out
        .chunks(n)
        .zip(r.weights())
        .map(|(row, ri)| (ri - row.iter().sum::<f64>()).max(0.0))
        .collect();
    let err_c: Vec<f64> = col_sums(&out, n)
        .iter()
        .zip(c.weights())
        .map(|(cs, cj)| (cj - cs).max(0.0))
        .collect();
    let mass: f64 = err_r.iter().sum();
    if mass > 0.0 {
        for (row, er) in out.chunks_mut(n).zip(&err_r) {
            for (e, ec) in row.iter_mut().zip(&err_c) {
                *e += er * ec / mass;
            }
        }
    }
    Ok(TransportPlan {
        n,
        entries: out,
        in_polytope: true,
    })
}

/// Bound on the norm of a dual solution in multiplier units:
/// `sqrt(N/2) (||C||_inf - gamma/2 ln min_{i,j} {r_i, c_j})`.
pub fn dual_radius_bound(prob: &EntropicOTProblem) -> Result<f64> {
    prob.require_positive_marginals()?;
    let n = prob.n() as f64;
    let min = prob.r.min().min(prob.c.min());
    Ok((n / 2.0).sqrt() * (prob.cost.max() - 0.5 * prob.gamma * min.ln()))
}

/// Converts an accumulator `A_k` of a run in `(u, v)` coordinates to
/// multiplier units, where the radius of [`dual_radius_bound`] applies.
pub fn accumulator_in_multiplier_units(prob: &EntropicOTProblem, accumulator: f64) -> f64 {
    prob.gamma * prob.gamma * accumulator
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtMethod {
    Sinkhorn,
    AcceleratedSinkhorn,
    /// Adaptive accelerated gradient on the same dual.
    Apdagd,
}

impl OtMethod {
    pub fn name(self) -> &'static str {
        match self {
            OtMethod::Sinkhorn => "sinkhorn",
            OtMethod::AcceleratedSinkhorn => "aam-sinkhorn",
            OtMethod::Apdagd => "apdagd-baseline",
        }
    }
}

/// One row of a convergence trace.
///
/// For Sinkhorn the primal point is `x(u, v)` itself and `lipschitz`,
/// `accumulator` are NaN. For the accelerated methods it is the primal
/// average and `dual` is taken at `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub seconds: f64,
    pub dual: f64,
    pub feas_l1: f64,
    /// Signed `f(x) + phi`.
    pub gap: f64,
    pub lipschitz: f64,
    pub accumulator: f64,
}

/// Stop when `feas_l1 <= feasibility` and `|gap| <= gap`, or after
/// `max_iters` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtStop {
    pub max_iters: usize,
    pub feasibility: f64,
    pub gap: f64,
}

impl OtStop {
    pub fn new(max_iters: usize, tol: f64) -> Self {
        Self {
            max_iters,
            feasibility: tol,
            gap: tol,
        }
    }

    fn satisfied(&self, row: &TraceRow) -> bool {
        row.feas_l1 <= self.feasibility && row.gap.abs() <= self.gap
    }
}

#[derive(Debug, Clone)]
pub struct OtRun {
    pub point: OTDualPoint,
    /// `x(u, v)` for Sinkhorn, the primal average otherwise.
    pub plan: TransportPlan,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

impl OtRun {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iteration)
    }
}

fn sinkhorn_row(
    prob: &EntropicOTProblem,
    u: &[f64],
    v: &[f64],
    iteration: usize,
    seconds: f64,
) -> (TraceRow, Vec<f64>) {
    let flat: Vec<f64> = u.iter().chain(v).copied().collect();
    let dual = prob.value(&flat);
    let plan = prob.primal_from_dual(&flat);
    let row = TraceRow {
        iteration,
        seconds,
        dual,
        feas_l1: l1_distance(&prob.constraint_apply(&plan), &prob.constraint_rhs()),
        gap: prob.primal_objective(&plan) + dual,
        lipschitz: f64::NAN,
        accumulator: f64::NAN,
    };
    (row, plan)
}

/// Classical Sinkhorn. Every half-step (a `u` or a `v` update) counts as one
/// iteration.
pub fn run_sinkhorn(prob: &EntropicOTProblem, stop: OtStop) -> Result<OtRun> {
    prob.require_positive_marginals()?;
    let clock = Stopwatch::start();
    let n = prob.n();
    let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
    let mut trace = Vec::new();
    let mut plan = Vec::new();
    let mut converged = false;
    for k in 1..=stop.max_iters {
        if k % 2 == 1 {
            u = u_update(prob, &u, &v);
        } else {
            v = v_update(prob, &u, &v);
        }
        let (row, x) = sinkhorn_row(prob, &u, &v, k, clock.seconds());
        trace.push(row);
        plan = x;
        if stop.satisfied(&row) {
            converged = true;
            break;
        }
    }
    if plan.is_empty() {
        plan = prob.primal_from_dual(&vec![0.0; 2 * n]);
    }
    Ok(OtRun {
        point: OTDualPoint { u, v },
        plan: TransportPlan::unchecked(n, plan),
        trace,
        converged,
    })
}

fn pd_row<P: PrimalDualProblem>(prob: &P, state: &PrimalDualState, seconds: f64) -> TraceRow {
    let dual = prob.value(&state.inner.x);
    TraceRow {
        iteration: state.inner.iteration,
        seconds,
        dual,
        feas_l1: l1_distance(&prob.constraint_apply(&state.x_hat), &prob.constraint_rhs()),
        gap: prob.primal_value(&state.x_hat) + dual,
        lipschitz: state.inner.lipschitz,
        accumulator: state.inner.accumulator,
    }
}

/// One iteration of accelerated Sinkhorn: an adaptive primal-dual step whose
/// block minimization is the Sinkhorn `u` or `v` update.
pub fn accelerated_sinkhorn_step(
    prob: &EntropicOTProblem,
    state: &mut PrimalDualState,
) -> Result<StepOutcome> {
    pdaam_step(prob, state, DualMethod::Adaptive)
}

/// Runs a primal-dual method on the OT dual. `method` must not be
/// [`OtMethod::Sinkhorn`].
pub fn run_primal_dual(
    prob: &EntropicOTProblem,
    method: OtMethod,
    l0: f64,
    stop: OtStop,
) -> Result<OtRun> {
    let dual_method = match method {
        OtMethod::Sinkhorn => return run_sinkhorn(prob, stop),
        OtMethod::AcceleratedSinkhorn => DualMethod::Adaptive,
        OtMethod::Apdagd => DualMethod::GradientBaseline,
    };
    prob.require_positive_marginals()?;
    let clock = Stopwatch::start();
    let mut state = PrimalDualState::from_problem(prob, l0);
    let mut trace = Vec::new();
    let mut converged = false;
    while state.inner.iteration < stop.max_iters {
        let outcome = pdaam_step(prob, &mut state, dual_method)?;
        if outcome == StepOutcome::Stationary {
            // stationarity does not advance the counter; record it as a step
            state.inner.iteration += 1;
        }
        let row = pd_row(prob, &state, clock.seconds());
        trace.push(row);
        if stop.satisfied(&row) {
            converged = true;
            break;
        }
        if outcome == StepOutcome::Stationary {
            break;
        }
    }
    let n = prob.n();
    Ok(OtRun {
        point: OTDualPoint::from_flat(&state.inner.x),
        plan: TransportPlan::unchecked(n, state.x_hat),
        trace,
        converged,
    })
}

/// Runs any of the three methods; `l0` is ignored by Sinkhorn.
pub fn run_method(
    prob: &EntropicOTProblem,
    method: OtMethod,
    l0: f64,
    stop: OtStop,
) -> Result<OtRun> {
    run_primal_dual(prob, method, l0, stop)
}

/// Settings of [`approximate_ot`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    pub method: OtMethod,
    pub max_iters: usize,
    pub l0: f64,
    /// Rounding and stopping tests run every `check_interval` iterations.
    pub check_interval: usize,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            method: OtMethod::AcceleratedSinkhorn,
            max_iters: 1_000_000,
            l0: DEFAULT_L0,
            check_interval: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxOtResult {
    /// Rounded plan, exactly in `U(r, c)` for the input marginals.
    pub plan: TransportPlan,
    /// `<C, plan>`.
    pub cost: f64,
    pub gamma: f64,
    pub eps_prime: f64,
    pub iterations: usize,
    /// Trace of the regularized solve on the smoothed marginals.
    pub trace: Vec<TraceRow>,
}

/// Regularization and smoothing parameters for target accuracy `eps`:
/// `gamma = eps / (4 ln N)` and `eps' = eps / (8 ||C||_inf)`, the latter capped
/// at 1 (a zero cost matrix allows any value).
pub fn approximation_parameters(cost: &CostMatrix, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let n = cost.n();
    if n < 2 {
        return Err(Error::InvalidParameter("need N >= 2".into()));
    }
    let gamma = eps / (4.0 * (n as f64).ln());
    let eps_prime = if cost.max() > 0.0 {
        (eps / (8.0 * cost.max())).min(1.0)
    } else {
        1.0
    };
    Ok((gamma, eps_prime))
}

/// Plan with `<C, X> <= OT(r, c) + eps`, exactly in `U(r, c)`.
///
/// The entropic problem is solved on smoothed marginals. At each check the
/// current primal point `X_k` is rounded onto `U(r, c)`; the run stops once
/// `<C, round(X_k) - X_k> <= eps/6` and `f(X_k) + phi <= eps/6`. Rounding is
/// skipped while the marginal error exceeds ten times its value at the last
/// check.
pub fn approximate_ot(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
    eps: f64,
    opts: ApproxOptions,
) -> Result<ApproxOtResult> {
    let (gamma, eps_prime) = approximation_parameters(cost, eps)?;
    if opts.max_iters == 0 || opts.check_interval == 0 {
        return Err(Error::InvalidParameter(
            "max_iters and check_interval must be positive".into(),
        ));
    }
    let prob = EntropicOTProblem::new(
        cost.clone(),
        gamma,
        smooth_marginals(r, eps_prime)?,
        smooth_marginals(c, eps_prime)?,
    )?;
    let n = prob.n();
    let target = eps / 6.0;
    let clock = Stopwatch::start();
    let mut trace = Vec::new();
    let mut last_feas = f64::INFINITY;
    let mut last = (f64::INFINITY, f64::INFINITY);

    let mut check = |row: &TraceRow, x: &[f64], force: bool| -> Result<Option<TransportPlan>> {
        if !force && row.feas_l1 > 10.0 * last_feas {
            return Ok(None);
        }
        last_feas = row.feas_l1;
        let rounded = round_to_polytope(&TransportPlan::unchecked(n, x.to_vec()), r, c)?;
        let rounding_cost = cost.dot(&rounded.entries) - cost.dot(x);
        last = (row.feas_l1, row.gap);
        if rounding_cost <= target && row.gap <= target {
            Ok(Some(rounded))
        } else {
            Ok(None)
        }
    };

    let finish = |plan: TransportPlan, iterations: usize, trace: Vec<TraceRow>| ApproxOtResult {
        cost: cost.dot(&plan.entries),
        plan,
        gamma,
        eps_prime,
        iterations,
        trace,
    };

    match opts.method {
        OtMethod::Sinkhorn => {
            let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
            for k in 1..=opts.max_iters {
                if k % 2 == 1 {
                    u = u_update(&prob, &u, &v);
                } else {
                    v = v_update(&prob, &u, &v);
                }
                let (row, x) = sinkhorn_row(&prob, &u, &v, k, clock.seconds());
                trace.push(row);
                if k % opts.check_interval == 0 || k == opts.max_iters {
                    if let Some(plan) = check(&row, &x, k == opts.max_iters)? {
                        return Ok(finish(plan, k, trace));
                    }
                }
            }
        }
        OtMethod::AcceleratedSinkhorn | OtMethod::Apdagd => {
            let dual_method = if opts.method == OtMethod::Apdagd {
                DualMethod::GradientBaseline
            } else {
                DualMethod::Adaptive
            };
            let mut state = PrimalDualState::from_problem(&prob, opts.l0);
            while state.inner.iteration < opts.max_iters {
                let outcome = pdaam_step(&prob, &mut state, dual_method)?;
                let stationary = outcome == StepOutcome::Stationary;
                if stationary {
                    state.inner.iteration += 1;
                }
                let k = state.inner.iteration;
                let row = pd_row(&prob, &state, clock.seconds());
                trace.push(row);
                if stationary || k.is_multiple_of(opts.check_interval) || k == opts.max_iters {
                    if let Some(plan) = check(&row, &state.x_hat, stationary)? {
                        return Ok(finish(plan, k, trace));
                    }
                }
                if stationary {
                    break;
                }
            }
        }
    }
    Err(Error::IterationLimit {
        max_iters: opts.max_iters,
        feasibility: last.0,
        gap: last.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(w: &[f64]) -> Histogram {
        Histogram::new(w.to_vec()).unwrap()
    }

    fn two_by_two(gamma: f64) -> EntropicOTProblem {
        EntropicOTProblem::new(
            CostMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            gamma,
            hist(&[0.7, 0.3]),
            hist(&[0.3, 0.7]),
        )
        .unwrap()
    }

    fn zero_cost(n: usize) -> EntropicOTProblem {
        EntropicOTProblem::new(
            CostMatrix::zeros(n),
            1.0,
            Histogram::uniform(n).unwrap(),
            Histogram::uniform(n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn dual_value_examples() {
        let p = zero_cost(2);
        assert!((ot_dual_value(&p, &OTDualPoint::zeros(2)) - 4f64.ln()).abs() < 1e-15);
        let h = 0.5f64.ln();
        let q = OTDualPoint {
            u: vec![h, h],
            v: vec![h, h],
        };
        assert!((ot_dual_value(&p, &q) - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn u_update_example() {
        let p = zero_cost(2);
        let q = sinkhorn_u_update(&p, &OTDualPoint::zeros(2)).unwrap();
        for ui in q.u {
            assert!((ui + 4f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_marginal_is_rejected() {
        let p = EntropicOTProblem::new(
            CostMatrix::zeros(2),
            1.0,
            hist(&[1.0, 0.0]),
            hist(&[0.5, 0.5]),
        )
        .unwrap();
        let err = sinkhorn_u_update(&p, &OTDualPoint::zeros(2)).unwrap_err();
        assert_eq!(err, Error::ZeroMarginal { index: 1 });
        assert!(sinkhorn_v_update(&p, &OTDualPoint::zeros(2)).is_ok());
    }

    #[test]
    fn full_sweep_on_zero_cost_gives_product() {
        let p = EntropicOTProblem::new(
            CostMatrix::zeros(3),
            0.7,
            hist(&[0.2, 0.3, 0.5]),
            hist(&[0.6, 0.1, 0.3]),
        )
        .unwrap();
        let q = sinkhorn_u_update(&p, &OTDualPoint::zeros(3)).unwrap();
        let q = sinkhorn_v_update(&p, &q).unwrap();
        let plan = primal_from_dual(&p, &q);
        for i in 0..3 {
            for j in 0..3 {
                let want = p.r().weights()[i] * p.c().weights()[j];
                assert!((plan.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rounding_hand_example() {
        let x = TransportPlan::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let h = hist(&[0.5, 0.5]);
        let out = round_to_polytope(&x, &h, &h).unwrap();
        assert_eq!(out.entries(), &[0.5, 0.0, 0.0, 0.5]);
        assert!(out.is_in_polytope());
        assert!(!x.is_in_polytope());
    }

    #[test]
    fn rounding_fixed_point() {
        let x = TransportPlan::new(2, vec![0.3, 0.4, 0.0, 0.3]).unwrap();
        let out = round_to_polytope(&x, &hist(&[0.7, 0.3]), &hist(&[0.3, 0.7])).unwrap();
        assert_eq!(out.entries(), x.entries());
    }

    #[test]
    fn radius_bound_examples() {
        let p = EntropicOTProblem::new(
            CostMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            1.0,
            hist(&[0.5, 0.5]),
            hist(&[0.5, 0.5]),
        )
        .unwrap();
        assert!((dual_radius_bound(&p).unwrap() - 1.346574).abs() < 1e-6);
        let u4 = Histogram::uniform(4).unwrap();
        let c = CostMatrix::new(4, (0..16).map(|i| (i % 5) as f64).collect()).unwrap();
        let p = EntropicOTProblem::new(c, 0.3, u4.clone(), u4).unwrap();
        let want = 2f64.sqrt() * (4.0 + 0.15 * 4f64.ln());
        assert!((dual_radius_bound(&p).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn approximation_parameters_example() {
        let c = CostMatrix::new(10, (0..100).map(|i| (i % 7) as f64 / 2.0).collect()).unwrap();
        let (gamma, eps_prime) = approximation_parameters(&c, 0.1).unwrap();
        assert!((gamma - 0.0108574).abs() < 1e-7);
        assert!((eps_prime - 0.1 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn zero_cost_accelerated_is_stationary_immediately() {
        let p = zero_cost(3);
        let run = run_primal_dual(
            &p,
            OtMethod::AcceleratedSinkhorn,
            1.0,
            OtStop::new(10, 1e-12),
        )
        .unwrap();
        assert!(run.converged);
        assert_eq!(run.iterations(), 1);
        assert!(run.trace[0].feas_l1 < 1e-15);
    }

    #[test]
    fn sinkhorn_and_accelerated_agree_on_two_by_two() {
        let p = two_by_two(0.5);
        let s = run_sinkhorn(&p, OtStop::new(10_000, 1e-13)).unwrap();
        let a = run_primal_dual(
            &p,
            OtMethod::AcceleratedSinkhorn,
            1.0,
            OtStop::new(200_000, 1e-8),
        )
        .unwrap();
        assert!(s.converged && a.converged);
        for (x, y) in s.plan.entries().iter().zip(a.plan.entries()) {
            assert!((x - y).abs() < 1e-6);
        }
        let (ds, da) = (s.trace.last().unwrap().dual, a.trace.last().unwrap().dual);
        assert!((ds - da).abs() < 1e-8);
    }

    #[test]
    fn approximate_ot_zero_cost_returns_at_first_check() {
        let c = CostMatrix::zeros(3);
        let r = hist(&[0.2, 0.3, 0.5]);
        let res = approximate_ot(&c, &r, &r, 0.1, ApproxOptions::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.cost, 0.0);
        assert!(res.plan.marginal_error_l1(r.weights(), r.weights()) < 1e-12);
    }
}
