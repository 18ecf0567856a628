//! Independent ground truth for small instances.

use crate::error::{Error, Result};
use crate::logmath::{CostMatrix, Histogram};
use crate::ot::{ot_dual_value, primal_from_dual, sinkhorn_u_update, sinkhorn_v_update};
use crate::ot::{EntropicOTProblem, OTDualPoint};

/// Largest `N` accepted by [`exact_ot_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOTResult {
    pub optimal_cost: f64,
    /// Row-major vertex of `U(r, c)`.
    pub optimal_plan: Vec<f64>,
}

struct Forest {
    parent: Vec<usize>,
    size: Vec<usize>,
    undo: Vec<(usize, usize)>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            undo: Vec::new(),
        }
    }

    fn find(&self, mut a: usize) -> usize {
        while self.parent[a] != a {
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.undo.push((a, b));
        true
    }

    fn rollback(&mut self) {
        let (a, b) = self.undo.pop().expect("rollback without union");
        self.parent[b] = b;
        self.size[a] -= self.size[b];
    }
}

struct Search<'a> {
    n: usize,
    cost: &'a CostMatrix,
    r: &'a [f64],
    c: &'a [f64],
    forest: Forest,
    chosen: Vec<usize>,
    best: Option<ExactOTResult>,
}

impl Search<'_> {
    fn visit(&mut self, cell: usize) {
        let need = 2 * self.n - 1 - self.chosen.len();
        if need == 0 {
            self.evaluate();
            return;
        }
        if self.n * self.n - cell < need {
            return;
        }
        let (i, j) = (cell / self.n, cell % self.n);
        if self.forest.union(i, self.n + j) {
            self.chosen.push(cell);
            self.visit(cell + 1);
            self.chosen.pop();
            self.forest.rollback();
        }
        self.visit(cell + 1);
    }

    /// Flows on the tree edges by repeatedly peeling leaves.
    fn evaluate(&mut self) {
        let n = self.n;
        let mut residual: Vec<f64> = self.r.iter().chain(self.c).copied().collect();
        let mut degree = vec![0usize; 2 * n];
        for &cell in &self.chosen {
            degree[cell / n] += 1;
            degree[n + cell % n] += 1;
        }
        let mut flow = vec![None; self.chosen.len()];
        let mut remaining = self.chosen.len();
        while remaining > 0 {
            let mut progressed = false;
            for (e, &cell) in self.chosen.iter().enumerate() {
                if flow[e].is_some() {
                    continue;
                }
                let (a, b) = (cell / n, n + cell % n);
                let (leaf, other) = if degree[a] == 1 {
                    (a, b)
                } else if degree[b] == 1 {
                    (b, a)
                } else {
                    continue;
                };
                let f = residual[leaf];
                if f < -1e-12 {
                    return;
                }
                flow[e] = Some(f.max(0.0));
                residual[leaf] = 0.0;
                residual[other] -= f;
                degree[leaf] -= 1;
                degree[other] -= 1;
                remaining -= 1;
                progressed = true;
            }
            if !progressed {
                return;
            }
        }
        let mut plan = vec![0.0; n * n];
        for (&cell, f) in self.chosen.iter().zip(flow) {
            plan[cell] = f.unwrap_or(0.0);
        }
        let cost = self.cost.dot(&plan);
        if self.best.as_ref().is_none_or(|b| cost < b.optimal_cost) {
            self.best = Some(ExactOTResult {
                optimal_cost: cost,
                optimal_plan: plan,
            });
        }
    }
}

/// Unregularized optimal transport by enumerating every spanning tree of the
/// bipartite row-column graph. Each vertex of `U(r, c)` is supported on a
/// spanning forest, which extends to a spanning tree with zero flows, so the
/// cheapest nonnegative tree flow is optimal.
pub fn exact_ot_bruteforce(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
) -> Result<ExactOTResult> {
    let n = cost.n();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge(n));
    }
    for h in [r, c] {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.len(),
            });
        }
    }
    let mut search = Search {
        n,
        cost,
        r: r.weights(),
        c: c.weights(),
        forest: Forest::new(2 * n),
        chosen: Vec::with_capacity(2 * n - 1),
        best: None,
    };
    search.visit(0);
    search
        .best
        .ok_or_else(|| Error::InvalidParameter("no feasible vertex found".into()))
}

/// High-precision regularized optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropicReference {
    pub point: OTDualPoint,
    pub dual_value: f64,
    /// Full Sinkhorn sweeps (a `u` and a `v` update each).
    pub sweeps: usize,
}

pub const REFERENCE_MAX_SWEEPS: usize = 1_000_000;

/// Plain Sinkhorn until successive dual values differ by less than `1e-14`
/// (or four ulps of the value, whichever is larger) and the row marginal
/// error is below `1e-12`.
pub fn entropic_reference(prob: &EntropicOTProblem) -> Result<EntropicReference> {
    prob.require_positive_marginals()?;
    let mut p = OTDualPoint::zeros(prob.n());
    let mut prev = ot_dual_value(prob, &p);
    let mut err = f64::INFINITY;
    for sweep in 1..=REFERENCE_MAX_SWEEPS {
        p = sinkhorn_u_update(prob, &p)?;
        p = sinkhorn_v_update(prob, &p)?;
        let value = ot_dual_value(prob, &p);
        err = primal_from_dual(prob, &p).marginal_error_l1(prob.r().weights(), prob.c().weights());
        let tol = 1e-14f64.max(4.0 * f64::EPSILON * value.abs());
        if (prev - value).abs() < tol && err < 1e-12 {
            return Ok(EntropicReference {
                point: p,
                dual_value: value,
                sweeps: sweep,
            });
        }
        prev = value;
    }
    Err(Error::IterationLimit {
        max_iters: REFERENCE_MAX_SWEEPS,
        feasibility: err,
        gap: f64::NAN,
    })
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let hi = f(&y);
            y[i] = x[i] - h;
            let lo = f(&y);
            y[i] = x[i];
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

/// Central difference along direction `d`.
pub fn finite_difference_directional(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    d: &[f64],
    h: f64,
) -> f64 {
    let step = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
    (f(&step(h)) - f(&step(-h))) / (2.0 * h)
}
