//! Log-domain primitives shared by every solver.
//!
//! Kernels are stored as `-C/gamma` and never exponentiated as a whole; row
//! and column sums of `B(u, v) = diag(e^u) K diag(e^v)` are reduced with
//! max-shifted log-sum-exp so that dual variables of any magnitude are safe.

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(weights) - 1` before a histogram is flagged as
/// renormalized.
pub const HISTOGRAM_TOL: f64 = 1e-12;

/// `max + ln sum exp(x - max)`. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(lse(values.iter().copied()))
}

/// Log-sum-exp over an iterator that may be traversed twice.
pub(crate) fn lse<I>(values: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    weights: Vec<f64>,
    renormalized: bool,
}

impl Histogram {
    /// Builds a histogram from nonnegative weights, dividing by their sum.
    /// [`Histogram::was_renormalized`] reports whether the input was off the
    /// simplex by more than [`HISTOGRAM_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidHistogram(format!("entry {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|&w| w < 0.0) {
            return Err(Error::InvalidHistogram(format!(
                "entry {i} is negative ({})",
                weights[i]
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidHistogram("total mass is zero".into()));
        }
        let renormalized = (total - 1.0).abs() > HISTOGRAM_TOL;
        let weights = if renormalized {
            weights.into_iter().map(|w| w / total).collect()
        } else {
            weights
        };
        Ok(Self {
            weights,
            renormalized,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Index of the first zero entry, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.weights.iter().position(|&w| w <= 0.0)
    }

    pub fn ln(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }
}

/// Square nonnegative cost matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
    max: f64,
}

impl CostMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidCost(format!(
                "entry ({}, {}) = {} is negative or not finite",
                i / n,
                i % n,
                entries[i]
            )));
        }
        let max = entries.iter().copied().fold(0.0, f64::max);
        Ok(Self { n, entries, max })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Self::new(n, rows.concat())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
            max: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Largest entry, `||C||_inf` in the entrywise sense.
    pub fn max(&self) -> f64 {
        self.max
    }

    /// Frobenius inner product with a row-major plan.
    pub fn dot(&self, plan: &[f64]) -> f64 {
        self.entries.iter().zip(plan).map(|(c, x)| c * x).sum()
    }
}

/// `-C/gamma`, the logarithm of the Gibbs kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct LogKernel {
    n: usize,
    log_entries: Vec<f64>,
    gamma: f64,
}

impl LogKernel {
    pub fn new(cost: &CostMatrix, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularization gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            n: cost.n,
            log_entries: cost.entries.iter().map(|c| -c / gamma).collect(),
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log_entries(&self) -> &[f64] {
        &self.log_entries
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.log_entries[i * self.n..(i + 1) * self.n]
    }
}

/// Logarithms of the row sums, column sums and total mass of `B(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMarginals {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub total: f64,
}

fn check_dims(kernel: &LogKernel, u: &[f64], v: &[f64]) {
    assert_eq!(u.len(), kernel.n, "u has wrong length");
    assert_eq!(v.len(), kernel.n, "v has wrong length");
}

/// `ln [B(u,v) 1]_i` for every row.
pub fn log_row_sums(kernel: &LogKernel, u: &[f64], v: &[f64]) -> Vec<f64> {
    check_dims(kernel, u, v);
    (0..kernel.n)
        .map(|i| {
            let ui = u[i];
            ui + lse(kernel.row(i).iter().zip(v).map(|(k, vj)| k + vj))
        })
        .collect()
}

/// `ln [B(u,v)^T 1]_j` for every column.
pub fn log_col_sums(kernel: &LogKernel, u: &[f64], v: &[f64]) -> Vec<f64> {
    check_dims(kernel, u, v);
    let n = kernel.n;
    // Column-wise max pass, then a shifted accumulation pass; both walk the
    // kernel row by row to stay cache friendly.
    let mut max = vec![f64::NEG_INFINITY; n];
    for (i, ui) in u.iter().enumerate() {
        for ((m, k), vj) in max.iter_mut().zip(kernel.row(i)).zip(v) {
            *m = m.max(ui + k + vj);
        }
    }
    let mut acc = vec![0.0; n];
    for (i, ui) in u.iter().enumerate() {
        for (((s, m), k), vj) in acc.iter_mut().zip(&max).zip(kernel.row(i)).zip(v) {
            if m.is_finite() {
                *s += (ui + k + vj - m).exp();
            }
        }
    }
    max.iter()
        .zip(acc)
        .map(|(&m, s)| if m.is_finite() { m + s.ln() } else { m })
        .collect()
}

/// Row, column and total log-masses of `B(u, v)`.
pub fn log_marginals(kernel: &LogKernel, u: &[f64], v: &[f64]) -> LogMarginals {
    let rows = log_row_sums(kernel, u, v);
    let cols = log_col_sums(kernel, u, v);
    let total = lse(rows.iter().copied());
    LogMarginals { rows, cols, total }
}

/// `ln 1^T B(u,v) 1`.
pub fn log_total(kernel: &LogKernel, u: &[f64], v: &[f64]) -> f64 {
    lse(log_row_sums(kernel, u, v).into_iter())
}

/// Normalized plan `B(u,v) / 1^T B 1`, row-major. This is the only place
/// where kernel entries are exponentiated.
pub fn normalized_plan(kernel: &LogKernel, u: &[f64], v: &[f64], log_total: f64) -> Vec<f64> {
    check_dims(kernel, u, v);
    let n = kernel.n;
    let mut plan = Vec::with_capacity(n * n);
    for (i, ui) in u.iter().enumerate() {
        let shift = ui - log_total;
        plan.extend(
            kernel
                .row(i)
                .iter()
                .zip(v)
                .map(|(k, vj)| (shift + k + vj).exp()),
        );
    }
    plan
}

/// Moves `r` into the interior of the simplex:
/// `(1 - e/8) (r + e / (N (8 - e)) 1)`.
///
/// The result is a histogram with every entry at least `e/(8N)` and within
/// `e/4` of `r` in l1.
pub fn smooth_marginals(r: &Histogram, eps_prime: f64) -> Result<Histogram> {
    if !(eps_prime > 0.0 && eps_prime < 8.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing parameter must lie in (0, 8), got {eps_prime}"
        )));
    }
    let n = r.len() as f64;
    let scale = 1.0 - eps_prime / 8.0;
    let lift = eps_prime / (n * (8.0 - eps_prime));
    let weights: Vec<f64> = r.weights().iter().map(|w| scale * (w + lift)).collect();
    let total: f64 = weights.iter().sum();
    Ok(Histogram {
        // already on the simplex up to rounding; keep the exact formula values
        renormalized: (total - 1.0).abs() > HISTOGRAM_TOL,
        weights,
    })
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sqnorm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `sum x ln x` with `0 ln 0 = 0`.
pub(crate) fn neg_entropy(x: &[f64]) -> f64 {
    x.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum()
}
