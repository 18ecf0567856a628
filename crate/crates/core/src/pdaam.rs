//! Primal-dual accelerated alternating minimization.
//!
//! For `min f(x) s.t. Ax = b, x in Q` the solver runs [`crate::aam`] on the
//! smooth dual `phi(lambda) = <lambda, b> + max_{x in Q} (-f(x) - <A^T lambda, x>)`
//! and recovers a primal point as the step-weighted average of the inner
//! maximizers `x(lambda^k)` taken at the extrapolated dual points.

use crate::aam::{
    aam_adaptive_step, aam_line_search_step, BlockObjective, SolverState, StepOutcome, StepRule,
    Variant,
};
use crate::error::Result;
use crate::logmath::{dot, sqnorm};

/// A linearly constrained convex problem seen through its dual. The
/// [`BlockObjective`] part is the dual objective `phi` to be minimized.
pub trait PrimalDualProblem: BlockObjective {
    fn primal_dim(&self) -> usize;

    /// The maximizer `x(lambda)` of the inner problem defining `phi`.
    fn primal_from_dual(&self, lambda: &[f64]) -> Vec<f64>;

    fn primal_value(&self, x: &[f64]) -> f64;

    fn constraint_apply(&self, x: &[f64]) -> Vec<f64>;

    fn constraint_rhs(&self) -> Vec<f64>;

    /// `A x - b`.
    fn constraint_residual(&self, x: &[f64]) -> Vec<f64> {
        self.constraint_apply(x)
            .into_iter()
            .zip(self.constraint_rhs())
            .map(|(ax, b)| ax - b)
            .collect()
    }
}

impl<T: PrimalDualProblem + ?Sized> PrimalDualProblem for &T {
    fn primal_dim(&self) -> usize {
        (**self).primal_dim()
    }
    fn primal_from_dual(&self, lambda: &[f64]) -> Vec<f64> {
        (**self).primal_from_dual(lambda)
    }
    fn primal_value(&self, x: &[f64]) -> f64 {
        (**self).primal_value(x)
    }
    fn constraint_apply(&self, x: &[f64]) -> Vec<f64> {
        (**self).constraint_apply(x)
    }
    fn constraint_rhs(&self) -> Vec<f64> {
        (**self).constraint_rhs()
    }
    fn constraint_residual(&self, x: &[f64]) -> Vec<f64> {
        (**self).constraint_residual(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    /// Dual solver state: `x` holds `eta^k`, `momentum` holds `zeta^k`.
    pub inner: SolverState,
    /// Weighted primal average.
    pub x_hat: Vec<f64>,
}

impl PrimalDualState {
    /// Dual points start at zero.
    pub fn new(dual_dim: usize, primal_dim: usize, l0: f64) -> Self {
        Self {
            inner: SolverState::new(vec![0.0; dual_dim], l0),
            x_hat: vec![0.0; primal_dim],
        }
    }

    pub fn from_problem<P: PrimalDualProblem + ?Sized>(prob: &P, l0: f64) -> Self {
        Self::new(prob.dim(), prob.primal_dim(), l0)
    }

    pub fn eta(&self) -> &[f64] {
        &self.inner.x
    }

    pub fn zeta(&self) -> &[f64] {
        &self.inner.momentum
    }
}

/// Feasibility and gap of the current primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificates {
    /// `||A x_hat - b||_2`.
    pub feasibility: f64,
    /// `f(x_hat) + phi(eta)`, signed.
    pub gap: f64,
}

/// Which inner iteration drives the dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMethod {
    /// Line-search AAM.
    LineSearch,
    /// Adaptive-L AAM.
    Adaptive,
    /// Adaptive accelerated gradient: the block minimization is replaced by
    /// a full gradient step.
    GradientBaseline,
}

impl From<Variant> for DualMethod {
    fn from(v: Variant) -> Self {
        match v {
            Variant::LineSearch => DualMethod::LineSearch,
            Variant::Adaptive => DualMethod::Adaptive,
        }
    }
}

fn fold_into_average(x_hat: &mut [f64], x_new: &[f64], step: f64, prev_accumulator: f64) {
    let total = prev_accumulator + step;
    let w_new = step / total;
    let w_old = prev_accumulator / total;
    for (h, x) in x_hat.iter_mut().zip(x_new) {
        *h = w_new * x + w_old * *h;
    }
}

/// One primal-dual iteration: a dual step followed by
/// `x_hat <- (a x(lambda) + A_k x_hat) / A_{k+1}`.
///
/// In the adaptive variant `A_k = L_k a_k^2`, so this is the same average as
/// `(a x(lambda) + L_k a_k^2 x_hat) / (L_{k+1} a_{k+1}^2)`.
///
/// On stationarity the dual point is optimal and `x_hat` is replaced by the
/// matching primal maximizer, which is then feasible.
pub fn pdaam_step<P: PrimalDualProblem + ?Sized>(
    prob: &P,
    state: &mut PrimalDualState,
    method: DualMethod,
) -> Result<StepOutcome> {
    let outcome = match method {
        DualMethod::LineSearch => aam_line_search_step(prob, &mut state.inner)?,
        DualMethod::Adaptive => {
            aam_adaptive_step(prob, &mut state.inner, StepRule::BlockMinimization)?
        }
        DualMethod::GradientBaseline => {
            aam_adaptive_step(prob, &mut state.inner, StepRule::GradientStep)?
        }
    };
    match &outcome {
        StepOutcome::Advanced(report) => {
            let x = prob.primal_from_dual(&report.extrapolated);
            fold_into_average(&mut state.x_hat, &x, report.step, report.prev_accumulator);
        }
        StepOutcome::Stationary => {
            state.x_hat = prob.primal_from_dual(&state.inner.x);
        }
    }
    Ok(outcome)
}

/// Adaptive accelerated gradient baseline on the same dual.
pub fn apdagd_baseline_step<P: PrimalDualProblem + ?Sized>(
    prob: &P,
    state: &mut PrimalDualState,
) -> Result<StepOutcome> {
    pdaam_step(prob, state, DualMethod::GradientBaseline)
}

pub fn certificates<P: PrimalDualProblem + ?Sized>(
    prob: &P,
    state: &PrimalDualState,
) -> Certificates {
    let residual = prob.constraint_residual(&state.x_hat);
    Certificates {
        feasibility: sqnorm(&residual).sqrt(),
        gap: prob.primal_value(&state.x_hat) + prob.value(&state.inner.x),
    }
}

/// `phi(lambda) - <grad phi(lambda), lambda> = -f(x(lambda))`; exposed for
/// consistency checks of problem implementations.
pub fn dual_linearization_offset<P: PrimalDualProblem + ?Sized>(prob: &P, lambda: &[f64]) -> f64 {
    let (phi, grad) = prob.value_and_gradient(lambda);
    phi - dot(&grad, lambda)
}
