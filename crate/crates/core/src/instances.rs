//! Seeded problem generators and pixel-grid costs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::logmath::{CostMatrix, Histogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMetric {
    SqEuclidean,
    L1,
}

/// Cost between the pixels of a `side x side` grid, row-major, scaled so the
/// largest entry is 1 (all zeros for `side = 1`).
pub fn grid_cost(side: usize, metric: GridMetric) -> Result<CostMatrix> {
    if side == 0 {
        return Err(Error::Empty);
    }
    let n = side * side;
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let di = (a / side).abs_diff(b / side) as f64;
            let dj = (a % side).abs_diff(b % side) as f64;
            entries.push(match metric {
                GridMetric::SqEuclidean => di * di + dj * dj,
                GridMetric::L1 => di + dj,
            });
        }
    }
    let max = entries.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        entries.iter_mut().for_each(|e| *e /= max);
    }
    CostMatrix::new(n, entries)
}

/// Histogram with i.i.d. uniform weights in `[floor, 1]` before normalization.
pub fn random_histogram<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Histogram {
    let w = (0..n).map(|_| rng.gen_range(floor..=1.0)).collect();
    Histogram::new(w).expect("positive weights")
}

/// Like [`random_histogram`] but each entry is zero with probability
/// `p_zero`; at least one entry stays positive.
pub fn sparse_histogram<R: Rng>(rng: &mut R, n: usize, p_zero: f64) -> Histogram {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(p_zero) {
                0.0
            } else {
                rng.gen_range(0.05..=1.0)
            }
        })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    Histogram::new(w).expect("nonzero mass")
}

/// Integer costs in `0..=max`.
pub fn random_integer_cost<R: Rng>(rng: &mut R, n: usize, max: u32) -> CostMatrix {
    let e = (0..n * n).map(|_| rng.gen_range(0..=max) as f64).collect();
    CostMatrix::new(n, e).expect("valid cost")
}

/// Costs uniform in `[0, 1]`.
pub fn random_cost<R: Rng>(rng: &mut R, n: usize) -> CostMatrix {
    let e = (0..n * n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    CostMatrix::new(n, e).expect("valid cost")
}

/// Synthetic grayscale "digit": one to three Gaussian strokes on a dark
/// `side x side` canvas, intensities in `0..=255`, faint pixels cut to zero.
pub fn blob_image<R: Rng>(rng: &mut R, side: usize) -> Vec<u8> {
    let s = side as f64;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            (
                rng.gen_range(0.2 * s..0.8 * s),
                rng.gen_range(0.2 * s..0.8 * s),
                rng.gen_range(0.08 * s..0.2 * s),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..side * side)
        .map(|k| {
            let (y, x) = ((k / side) as f64 + 0.5, (k % side) as f64 + 0.5);
            blobs
                .iter()
                .map(|(cy, cx, w, a)| {
                    a * (-((y - cy).powi(2) + (x - cx).powi(2)) / (2.0 * w * w)).exp()
                })
                .sum()
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    raw.iter()
        .map(|v| {
            let t = v / max;
            if t < 0.05 {
                0
            } else {
                (255.0 * t).round() as u8
            }
        })
        .collect()
}

/// Pixel intensities as a histogram.
pub fn image_histogram(pixels: &[u8]) -> Result<Histogram> {
    Histogram::new(pixels.iter().map(|&p| p as f64).collect())
}
