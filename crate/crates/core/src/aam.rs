//! Accelerated alternating minimization.
//!
//! Two variants share one state type:
//!
//! * [`Variant::LineSearch`] picks the extrapolation weight by a one-dimensional
//!   search on the segment `[x, v]` and the step `a` from a scalar quadratic,
//!   so it needs no smoothness constant at all.
//! * [`Variant::Adaptive`] fixes the extrapolation weight from a running
//!   Lipschitz estimate which is halved at the start of every iteration and
//!   doubled until the sufficient-decrease test passes.
//!
//! In both, the new iterate is the exact minimizer of the objective over the
//! block with the largest partial gradient (Gauss-Southwell rule), taken at
//! the extrapolated point, and the momentum point moves along the full
//! gradient.

use std::ops::Range;

use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::logmath::sqnorm;

/// Squared gradient norms below this are treated as exact zeros.
pub const STATIONARY_SQNORM: f64 = 1e-24;

/// Backtracking gives up after this many doublings of `L`.
pub const MAX_DOUBLINGS: u32 = 64;

/// Interval width at which the golden-section search stops.
pub const LINE_SEARCH_WIDTH: f64 = 1e-10;

/// Default initial Lipschitz estimate for the adaptive variant. Overshooting
/// the true constant only costs a logarithmic number of extra iterations.
pub const DEFAULT_L0: f64 = 1.0;

/// Oracle for a smooth objective whose coordinates split into disjoint
/// contiguous blocks, each admitting an exact minimizer.
pub trait BlockObjective {
    fn dim(&self) -> usize;

    fn num_blocks(&self) -> usize;

    /// Coordinates of block `i`. Blocks partition `0..dim()`.
    fn block(&self, i: usize) -> Range<usize>;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }

    fn block_gradient_sqnorm(&self, x: &[f64], i: usize) -> f64 {
        sqnorm(&self.gradient(x)[self.block(i)])
    }

    /// `f(from) - f(to)` together with a bound on its rounding error, given
    /// both values. Override when the difference can be formed without the
    /// cancellation of subtracting two nearly equal values.
    fn decrease(&self, from: &[f64], f_from: f64, to: &[f64], f_to: f64) -> Decrease {
        let _ = (from, to);
        Decrease::by_subtraction(f_from, f_to)
    }

    /// Minimizer of the objective over points that agree with `x` outside
    /// block `i`. Coordinates outside the block must be copied bit for bit.
    fn block_minimize(&self, x: &[f64], i: usize) -> Vec<f64>;
}

impl<T: BlockObjective + ?Sized> BlockObjective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_blocks(&self) -> usize {
        (**self).num_blocks()
    }
    fn block(&self, i: usize) -> Range<usize> {
        (**self).block(i)
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(x)
    }
    fn block_gradient_sqnorm(&self, x: &[f64], i: usize) -> f64 {
        (**self).block_gradient_sqnorm(x, i)
    }
    fn decrease(&self, from: &[f64], f_from: f64, to: &[f64], f_to: f64) -> Decrease {
        (**self).decrease(from, f_from, to, f_to)
    }
    fn block_minimize(&self, x: &[f64], i: usize) -> Vec<f64> {
        (**self).block_minimize(x, i)
    }
}

/// A difference of objective values and its rounding error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decrease {
    pub value: f64,
    pub error: f64,
}

impl Decrease {
    pub fn by_subtraction(f_from: f64, f_to: f64) -> Self {
        Self {
            value: f_from - f_to,
            error: 16.0 * f64::EPSILON * (f_from.abs() + f_to.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    LineSearch,
    Adaptive,
}

/// What replaces the iterate after extrapolation in the adaptive variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Exact minimization over the block with the largest partial gradient.
    BlockMinimization,
    /// Plain gradient step `y - grad f(y) / L`; turns the method into an
    /// adaptive accelerated gradient method.
    GradientStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Current iterate `x^k`.
    pub x: Vec<f64>,
    /// Momentum point `v^k`.
    pub momentum: Vec<f64>,
    /// Last accepted step `a_k`.
    pub step: f64,
    /// `A_k`, the sum of accepted steps.
    pub accumulator: f64,
    /// Current Lipschitz estimate `L_k` (adaptive variant only).
    pub lipschitz: f64,
    pub iteration: usize,
}

impl SolverState {
    pub fn new(x0: Vec<f64>, l0: f64) -> Self {
        Self {
            momentum: x0.clone(),
            x: x0,
            step: 0.0,
            accumulator: 0.0,
            lipschitz: l0,
            iteration: 0,
        }
    }
}

/// Diagnostics of one accepted iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Extrapolated point `y^k` at which the gradient was taken.
    pub extrapolated: Vec<f64>,
    pub value_at_extrapolated: f64,
    pub value_at_next: f64,
    /// `||grad f(y^k)||^2`.
    pub grad_sqnorm: f64,
    pub block: usize,
    /// Extrapolation weight: `beta_k` for line search, `tau_k` for adaptive.
    pub weight: f64,
    /// `a_{k+1}`.
    pub step: f64,
    /// `A_k` before this iteration.
    pub prev_accumulator: f64,
    pub doublings: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Advanced(StepReport),
    /// The gradient vanished at the extrapolated point, which is now stored
    /// in `state.x`.
    Stationary,
}

/// Block with the largest squared partial gradient; ties go to the lowest
/// index.
pub fn select_block<O: BlockObjective + ?Sized>(obj: &O, y: &[f64]) -> usize {
    let mut best = 0;
    let mut best_norm = f64::NEG_INFINITY;
    for i in 0..obj.num_blocks() {
        let s = obj.block_gradient_sqnorm(y, i);
        if s > best_norm {
            best = i;
            best_norm = s;
        }
    }
    best
}

/// [`select_block`] with a precomputed gradient.
pub fn select_block_from_gradient<O: BlockObjective + ?Sized>(obj: &O, grad: &[f64]) -> usize {
    let mut best = 0;
    let mut best_norm = f64::NEG_INFINITY;
    for i in 0..obj.num_blocks() {
        let s = sqnorm(&grad[obj.block(i)]);
        if s > best_norm {
            best = i;
            best_norm = s;
        }
    }
    best
}

fn lerp(x: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(v).map(|(a, b)| a + t * (b - a)).collect()
}

/// Approximately minimizes `f(x + beta (v - x))` over `beta in [0, 1]`.
///
/// Golden-section search down to [`LINE_SEARCH_WIDTH`], after which both
/// endpoints are also tried, so `f(y) <= f(x)` always holds.
pub fn line_search_beta<O: BlockObjective + ?Sized>(
    obj: &O,
    x: &[f64],
    v: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if x == v {
        return Ok((0.0, x.to_vec()));
    }
    let eval = |beta: f64| -> Result<f64> {
        let f = obj.value(&lerp(x, v, beta));
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFiniteLineSearch { beta })
        }
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while hi - lo > LINE_SEARCH_WIDTH {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = eval(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = eval(d)?;
        }
    }
    let (mut beta, mut best) = if fc <= fd { (c, fc) } else { (d, fd) };
    for edge in [0.0, 1.0] {
        let f = eval(edge)?;
        if f <= best {
            beta = edge;
            best = f;
        }
    }
    Ok((beta, lerp(x, v, beta)))
}

/// Largest root `a` of `a^2 / (2 (A + a)) g2 = f_y - f_next`.
///
/// Returns [`Error::Stationary`] when the gradient vanishes or the block step
/// made no progress, since then only `a = 0` solves the equation.
pub fn solve_step_quadratic(accumulator: f64, decrease: f64, grad_sqnorm: f64) -> Result<f64> {
    if grad_sqnorm < STATIONARY_SQNORM || decrease <= 0.0 {
        return Err(Error::Stationary);
    }
    // (g2/2) a^2 - decrease a - A decrease = 0
    let disc = decrease * decrease + 2.0 * grad_sqnorm * accumulator * decrease;
    Ok((decrease + disc.sqrt()) / grad_sqnorm)
}

/// One iteration of the line-search variant.
pub fn aam_line_search_step<O: BlockObjective + ?Sized>(
    obj: &O,
    state: &mut SolverState,
) -> Result<StepOutcome> {
    let (beta, y) = line_search_beta(obj, &state.x, &state.momentum)?;
    let (f_y, grad) = obj.value_and_gradient(&y);
    let grad_sqnorm = sqnorm(&grad);
    if grad_sqnorm < STATIONARY_SQNORM {
        state.x = y;
        return Ok(StepOutcome::Stationary);
    }
    let block = select_block_from_gradient(obj, &grad);
    let next = obj.block_minimize(&y, block);
    let f_next = obj.value(&next);
    let decrease = obj.decrease(&y, f_y, &next, f_next).value;
    let step = match solve_step_quadratic(state.accumulator, decrease, grad_sqnorm) {
        Ok(a) => a,
        Err(Error::Stationary) => {
            if decrease >= 0.0 {
                state.x = next;
            } else {
                state.x = y;
            }
            return Ok(StepOutcome::Stationary);
        }
        Err(e) => return Err(e),
    };
    let prev_accumulator = state.accumulator;
    state.accumulator += step;
    state.step = step;
    for (m, g) in state.momentum.iter_mut().zip(&grad) {
        *m -= step * g;
    }
    state.x = next;
    state.iteration += 1;
    Ok(StepOutcome::Advanced(StepReport {
        extrapolated: y,
        value_at_extrapolated: f_y,
        value_at_next: f_next,
        grad_sqnorm,
        block,
        weight: beta,
        step,
        prev_accumulator,
        doublings: 0,
    }))
}

/// Sufficient-decrease test `f_y - f_next >= g2 / (2L)`, up to the rounding
/// error of the decrease so that nearly converged runs cannot force endless
/// doublings.
fn sufficient_decrease(decrease: Decrease, grad_sqnorm: f64, lipschitz: f64) -> bool {
    decrease.value + decrease.error >= grad_sqnorm / (2.0 * lipschitz)
}

/// One iteration of the adaptive variant.
pub fn aam_adaptive_step<O: BlockObjective + ?Sized>(
    obj: &O,
    state: &mut SolverState,
    rule: StepRule,
) -> Result<StepOutcome> {
    if !(state.lipschitz > 0.0 && state.lipschitz.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz estimate must be positive, got {}",
            state.lipschitz
        )));
    }
    let prev_l = state.lipschitz;
    let prev_a = state.step;
    let mut l_next = prev_l / 2.0;
    let mut doublings = 0;
    loop {
        let step = 1.0 / (2.0 * l_next)
            + (1.0 / (4.0 * l_next * l_next) + prev_a * prev_a * prev_l / l_next).sqrt();
        let tau = (1.0 / (step * l_next)).min(1.0);
        let y = lerp(&state.x, &state.momentum, tau);
        let (f_y, grad) = obj.value_and_gradient(&y);
        let grad_sqnorm = sqnorm(&grad);
        if grad_sqnorm < STATIONARY_SQNORM {
            state.x = y;
            return Ok(StepOutcome::Stationary);
        }
        let block = select_block_from_gradient(obj, &grad);
        let next = match rule {
            StepRule::BlockMinimization => obj.block_minimize(&y, block),
            StepRule::GradientStep => y.iter().zip(&grad).map(|(p, g)| p - g / l_next).collect(),
        };
        let f_next = obj.value(&next);
        if sufficient_decrease(obj.decrease(&y, f_y, &next, f_next), grad_sqnorm, l_next) {
            let prev_accumulator = state.accumulator;
            state.accumulator += step;
            state.step = step;
            state.lipschitz = l_next;
            for (m, g) in state.momentum.iter_mut().zip(&grad) {
                *m -= step * g;
            }
            state.x = next;
            state.iteration += 1;
            return Ok(StepOutcome::Advanced(StepReport {
                extrapolated: y,
                value_at_extrapolated: f_y,
                value_at_next: f_next,
                grad_sqnorm,
                block,
                weight: tau,
                step,
                prev_accumulator,
                doublings,
            }));
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::BacktrackingExhausted { doublings });
        }
        doublings += 1;
        l_next *= 2.0;
    }
}

/// One iteration of either variant; [`StepRule::BlockMinimization`] is used
/// for the adaptive one.
pub fn aam_step<O: BlockObjective + ?Sized>(
    obj: &O,
    state: &mut SolverState,
    variant: Variant,
) -> Result<StepOutcome> {
    match variant {
        Variant::LineSearch => aam_line_search_step(obj, state),
        Variant::Adaptive => aam_adaptive_step(obj, state, StepRule::BlockMinimization),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AamTraceRow {
    pub iteration: usize,
    pub seconds: f64,
    /// `f(x^k)`.
    pub value: f64,
    /// `||grad f(y^{k-1})||^2`; NaN on the initial row.
    pub grad_sqnorm: f64,
    pub accumulator: f64,
    pub lipschitz: f64,
}

/// Termination criteria, combined with "or".
pub struct StoppingRule<'a> {
    pub max_iters: usize,
    pub grad_sqnorm_tol: Option<f64>,
    pub predicate: Option<Box<dyn FnMut(&AamTraceRow) -> bool + 'a>>,
}

impl<'a> StoppingRule<'a> {
    pub fn max_iters(max_iters: usize) -> Self {
        Self {
            max_iters,
            grad_sqnorm_tol: None,
            predicate: None,
        }
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_sqnorm_tol = Some(tol);
        self
    }

    pub fn with_predicate(mut self, f: impl FnMut(&AamTraceRow) -> bool + 'a) -> Self {
        self.predicate = Some(Box::new(f));
        self
    }

    fn should_stop(&mut self, row: &AamTraceRow) -> bool {
        if row.iteration >= self.max_iters {
            return true;
        }
        if let Some(tol) = self.grad_sqnorm_tol {
            if row.grad_sqnorm <= tol {
                return true;
            }
        }
        match self.predicate.as_mut() {
            Some(p) => p(row),
            None => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AamRun {
    pub x: Vec<f64>,
    pub trace: Vec<AamTraceRow>,
    pub stationary: bool,
}

impl AamRun {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iteration)
    }
}

/// Runs either variant from `x0` until `stop` fires or a stationary point is
/// hit. `l0` is ignored by the line-search variant.
pub fn run_aam<O: BlockObjective + ?Sized>(
    obj: &O,
    x0: Vec<f64>,
    variant: Variant,
    l0: f64,
    mut stop: StoppingRule<'_>,
) -> Result<AamRun> {
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    let clock = Stopwatch::start();
    let mut state = SolverState::new(x0, l0);
    let mut trace = vec![AamTraceRow {
        iteration: 0,
        seconds: 0.0,
        value: obj.value(&state.x),
        grad_sqnorm: f64::NAN,
        accumulator: 0.0,
        lipschitz: state.lipschitz,
    }];
    let mut stationary = false;
    while state.iteration < stop.max_iters {
        match aam_step(obj, &mut state, variant)? {
            StepOutcome::Stationary => {
                stationary = true;
                break;
            }
            StepOutcome::Advanced(report) => {
                let row = AamTraceRow {
                    iteration: state.iteration,
                    seconds: clock.seconds(),
                    value: report.value_at_next,
                    grad_sqnorm: report.grad_sqnorm,
                    accumulator: state.accumulator,
                    lipschitz: state.lipschitz,
                };
                trace.push(row);
                if stop.should_stop(&row) {
                    break;
                }
            }
        }
    }
    Ok(AamRun {
        x: state.x,
        trace,
        stationary,
    })
}
