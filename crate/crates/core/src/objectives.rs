//! Analytic objectives with known smoothness constants and optima, used by
//! the test suites and the browser demo.

use std::ops::Range;

use rand::Rng;

use crate::aam::BlockObjective;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_diag, matvec, matvec_t, random_orthogonal, submatrix, Cholesky};
use crate::logmath::{dot, sqnorm};
use crate::pdaam::PrimalDualProblem;

/// Splits `0..dim` into `n` contiguous blocks of near-equal size.
pub fn even_blocks(dim: usize, n: usize) -> Vec<Range<usize>> {
    let base = dim / n;
    let extra = dim % n;
    let mut start = 0;
    (0..n)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// `f(x) = 1/2 (x - c)^T Q (x - c)` with `Q` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    n: usize,
    q: Vec<f64>,
    center: Vec<f64>,
    blocks: Vec<Range<usize>>,
    block_factors: Vec<Cholesky>,
    lipschitz: Option<f64>,
}

impl Quadratic {
    pub fn new(q: Vec<f64>, center: Vec<f64>, blocks: Vec<Range<usize>>) -> Result<Self> {
        let n = center.len();
        if q.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: q.len(),
            });
        }
        let covered: usize = blocks.iter().map(|b| b.len()).sum();
        if covered != n || blocks.iter().any(|b| b.end > n || b.is_empty()) {
            return Err(Error::InvalidParameter(
                "blocks must partition the coordinates".into(),
            ));
        }
        let block_factors = blocks
            .iter()
            .map(|b| Cholesky::new(&submatrix(&q, n, b.clone()), b.len()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            q,
            center,
            blocks,
            block_factors,
            lipschitz: None,
        })
    }

    /// Random quadratic `Q = U diag(eigs) U^T` with eigenvalues drawn from
    /// `[eig_min, eig_max]`, the largest pinned at `eig_max` so `L` is known
    /// exactly.
    pub fn random<R: Rng>(
        rng: &mut R,
        dim: usize,
        num_blocks: usize,
        eig_min: f64,
        eig_max: f64,
    ) -> Self {
        let u = random_orthogonal(rng, dim);
        let mut eigs: Vec<f64> = (0..dim).map(|_| rng.gen_range(eig_min..=eig_max)).collect();
        eigs[0] = eig_max;
        let q = conjugate_diag(&u, &eigs);
        let center = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut quad = Self::new(q, center, even_blocks(dim, num_blocks))
            .expect("random quadratic is positive definite");
        quad.lipschitz = Some(eig_max);
        quad
    }

    /// Smoothness constant, when known by construction.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.center
    }

    fn gradient_of_shift(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        matvec(&self.q, self.n, self.n, &d)
    }
}

impl BlockObjective for Quadratic {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    fn block(&self, i: usize) -> Range<usize> {
        self.blocks[i].clone()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        0.5 * dot(&d, &matvec(&self.q, self.n, self.n, &d))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_of_shift(x)
    }

    fn block_minimize(&self, x: &[f64], i: usize) -> Vec<f64> {
        let b = self.blocks[i].clone();
        let g = self.gradient_of_shift(x);
        let delta = self.block_factors[i].solve(&g[b.clone()]);
        let mut out = x.to_vec();
        for (o, d) in out[b].iter_mut().zip(delta) {
            *o -= d;
        }
        out
    }
}

/// Nonconvex `f(x) = 1/2 x^T Q x - sum_i b_i cos(x_i)` with one coordinate
/// per block. Bounded below by `-sum b_i`; gradient Lipschitz with constant at
/// most `lambda_max(Q) + max b_i`.
#[derive(Debug, Clone)]
pub struct CosineQuadratic {
    n: usize,
    q: Vec<f64>,
    b: Vec<f64>,
    lipschitz: f64,
}

impl CosineQuadratic {
    pub fn random<R: Rng>(rng: &mut R, dim: usize) -> Self {
        let u = random_orthogonal(rng, dim);
        let mut eigs: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..=2.0)).collect();
        eigs[0] = 2.0;
        let q = conjugate_diag(&u, &eigs);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(1.0..=3.0)).collect();
        let lipschitz = 2.0 + b.iter().copied().fold(0.0, f64::max);
        Self {
            n: dim,
            q,
            b,
            lipschitz,
        }
    }

    /// Upper bound on the gradient Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Global lower bound on the objective.
    pub fn lower_bound(&self) -> f64 {
        -self.b.iter().sum::<f64>()
    }

    fn coordinate_objective(&self, x: &[f64], i: usize) -> impl Fn(f64) -> f64 + '_ {
        let qii = self.q[i * self.n + i];
        let coupling: f64 = (0..self.n)
            .filter(|&j| j != i)
            .map(|j| self.q[i * self.n + j] * x[j])
            .sum();
        let bi = self.b[i];
        move |t: f64| 0.5 * qii * t * t + coupling * t - bi * t.cos()
    }
}

impl BlockObjective for CosineQuadratic {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_blocks(&self) -> usize {
        self.n
    }

    fn block(&self, i: usize) -> Range<usize> {
        i..i + 1
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &matvec(&self.q, self.n, self.n, x))
            - self.b.iter().zip(x).map(|(b, t)| b * t.cos()).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = matvec(&self.q, self.n, self.n, x);
        for ((gi, b), t) in g.iter_mut().zip(&self.b).zip(x) {
            *gi += b * t.sin();
        }
        g
    }

    /// Global one-dimensional minimization: every critical point lies in
    /// `[(-c - b)/q, (-c + b)/q]`, which is scanned on a fine grid and the
    /// best cell refined by golden section.
    fn block_minimize(&self, x: &[f64], i: usize) -> Vec<f64> {
        let g = self.coordinate_objective(x, i);
        let qii = self.q[i * self.n + i];
        let coupling: f64 = (0..self.n)
            .filter(|&j| j != i)
            .map(|j| self.q[i * self.n + j] * x[j])
            .sum();
        let lo = (-coupling - self.b[i]) / qii;
        let hi = (-coupling + self.b[i]) / qii;
        const GRID: usize = 4000;
        let h = (hi - lo) / GRID as f64;
        let (mut best_t, mut best_f) = (x[i], g(x[i]));
        for s in 0..=GRID {
            let t = lo + h * s as f64;
            let f = g(t);
            if f < best_f {
                best_t = t;
                best_f = f;
            }
        }
        let (mut a, mut c) = (best_t - h, best_t + h);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        while c - a > 1e-13 * (1.0 + best_t.abs()) {
            let m1 = c - inv_phi * (c - a);
            let m2 = a + inv_phi * (c - a);
            if g(m1) <= g(m2) {
                c = m2;
            } else {
                a = m1;
            }
        }
        let refined = 0.5 * (a + c);
        let mut out = x.to_vec();
        if g(refined) <= best_f {
            out[i] = refined;
        } else {
            out[i] = best_t;
        }
        out
    }
}

/// Dual of `min 1/2 ||x||^2 s.t. A x = b`:
/// `phi(lambda) = <lambda, b> + 1/2 ||A^T lambda||^2`, `x(lambda) = -A^T lambda`.
#[derive(Debug, Clone)]
pub struct QuadraticDual {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    gram: Vec<f64>,
    blocks: Vec<Range<usize>>,
    block_factors: Vec<Cholesky>,
    lipschitz: f64,
}

impl QuadraticDual {
    /// `A = U diag(s) V^T` (first `rows` columns of `V`) with singular values
    /// in `[0.5, 2]`, the largest pinned at 2, so `||A||^2 = 4`.
    pub fn random<R: Rng>(rng: &mut R, rows: usize, cols: usize, num_blocks: usize) -> Self {
        assert!(rows <= cols, "need a full row rank operator");
        let u = random_orthogonal(rng, rows);
        let v = random_orthogonal(rng, cols);
        let mut s: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.5..=2.0)).collect();
        s[0] = 2.0;
        let mut a = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                a[i * cols + j] = (0..rows)
                    .map(|k| u[i * rows + k] * s[k] * v[j * cols + k])
                    .sum();
            }
        }
        let b = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self::new(a, rows, cols, b, even_blocks(rows, num_blocks), 4.0)
    }

    fn new(
        a: Vec<f64>,
        rows: usize,
        cols: usize,
        b: Vec<f64>,
        blocks: Vec<Range<usize>>,
        lipschitz: f64,
    ) -> Self {
        let mut gram = vec![0.0; rows * rows];
        for i in 0..rows {
            for j in 0..rows {
                gram[i * rows + j] = (0..cols).map(|k| a[i * cols + k] * a[j * cols + k]).sum();
            }
        }
        let block_factors = blocks
            .iter()
            .map(|r| Cholesky::new(&submatrix(&gram, rows, r.clone()), r.len()).expect("full rank"))
            .collect();
        Self {
            rows,
            cols,
            a,
            b,
            gram,
            blocks,
            block_factors,
            lipschitz,
        }
    }

    /// `||A||^2`, the exact smoothness constant of the dual.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Unique dual solution `(A A^T)^{-1} (-b)`.
    pub fn dual_solution(&self) -> Vec<f64> {
        let chol = Cholesky::new(&self.gram, self.rows).expect("full rank");
        chol.solve(&self.b.iter().map(|x| -x).collect::<Vec<_>>())
    }

    /// Optimal primal value `1/2 b^T (A A^T)^{-1} b`.
    pub fn optimal_value(&self) -> f64 {
        -dot(&self.dual_solution(), &self.b) * 0.5
    }
}

impl BlockObjective for QuadraticDual {
    fn dim(&self) -> usize {
        self.rows
    }

    fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    fn block(&self, i: usize) -> Range<usize> {
        self.blocks[i].clone()
    }

    fn value(&self, lambda: &[f64]) -> f64 {
        dot(lambda, &self.b) + 0.5 * sqnorm(&matvec_t(&self.a, self.rows, self.cols, lambda))
    }

    fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let mut g = matvec(&self.gram, self.rows, self.rows, lambda);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi += bi;
        }
        g
    }

    fn block_minimize(&self, lambda: &[f64], i: usize) -> Vec<f64> {
        let r = self.blocks[i].clone();
        let g = self.gradient(lambda);
        let delta = self.block_factors[i].solve(&g[r.clone()]);
        let mut out = lambda.to_vec();
        for (o, d) in out[r].iter_mut().zip(delta) {
            *o -= d;
        }
        out
    }
}

impl PrimalDualProblem for QuadraticDual {
    fn primal_dim(&self) -> usize {
        self.cols
    }

    fn primal_from_dual(&self, lambda: &[f64]) -> Vec<f64> {
        matvec_t(&self.a, self.rows, self.cols, lambda)
            .into_iter()
            .map(|x| -x)
            .collect()
    }

    fn primal_value(&self, x: &[f64]) -> f64 {
        0.5 * sqnorm(x)
    }

    fn constraint_apply(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.a, self.rows, self.cols, x)
    }

    fn constraint_rhs(&self) -> Vec<f64> {
        self.b.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blocks_partition() {
        let b = even_blocks(7, 3);
        assert_eq!(b, vec![0..3, 3..5, 5..7]);
    }

    #[test]
    fn quadratic_block_minimization_zeroes_block_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = Quadratic::random(&mut rng, 8, 3, 0.1, 5.0);
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.3).collect();
        for i in 0..3 {
            let y = f.block_minimize(&x, i);
            assert!(f.block_gradient_sqnorm(&y, i) < 1e-20);
            for j in (0..8).filter(|j| !f.block(i).contains(j)) {
                assert_eq!(y[j].to_bits(), x[j].to_bits());
            }
            assert!(f.value(&y) <= f.value(&x));
        }
    }

    #[test]
    fn cosine_block_minimization_is_global_in_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = CosineQuadratic::random(&mut rng, 3);
        let x = vec![0.7, -2.0, 4.0];
        for i in 0..3 {
            let y = f.block_minimize(&x, i);
            let best = f.value(&y);
            for s in -2000..=2000 {
                let mut z = x.clone();
                z[i] = s as f64 * 0.005;
                assert!(best <= f.value(&z) + 1e-9);
            }
            assert!(f.value(&y) >= f.lower_bound());
        }
    }

    #[test]
    fn dual_gradient_is_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = QuadraticDual::random(&mut rng, 4, 7, 2);
        let lambda = vec![0.1, -0.5, 0.9, 0.0];
        let g = p.gradient(&lambda);
        let res = p.constraint_residual(&p.primal_from_dual(&lambda));
        for (gi, ri) in g.iter().zip(res) {
            // grad phi = b - A x(lambda)
            assert!((gi + ri).abs() < 1e-12);
        }
    }
}
