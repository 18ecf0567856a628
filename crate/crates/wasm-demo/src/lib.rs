//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`; the layout is given on the
//! function.

use otaccel::aam::{aam_step, SolverState, StepOutcome, Variant};
use otaccel::barycenter::{run_accelerated_ibp, run_ibp, BarycenterProblem};
use otaccel::instances::{blob_image, grid_cost, image_histogram, GridMetric};
use otaccel::logmath::smooth_marginals;
use otaccel::objectives::Quadratic;
use otaccel::ot::{run_method, OtStop};
use otaccel::{CostMatrix, EntropicOTProblem, Histogram, OtMethod};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

type DemoResult<T> = Result<T, String>;

fn js_err(e: otaccel::Error) -> String {
    e.to_string()
}

fn ot_method(name: &str) -> DemoResult<OtMethod> {
    match name {
        "sinkhorn" => Ok(OtMethod::Sinkhorn),
        "aam-sinkhorn" => Ok(OtMethod::AcceleratedSinkhorn),
        "apdagd-baseline" => Ok(OtMethod::Apdagd),
        other => Err(format!("unknown method {other:?}")),
    }
}

/// Transport between two random `side x side` blob images.
///
/// Returns `[iter, feas_l1, |gap|]` triples, one per trace row, stopping at
/// `tol` or after `max_iters`.
pub fn ot_trace_data(
    method: &str,
    side: usize,
    seed: u32,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> DemoResult<Vec<f64>> {
    let method = ot_method(method)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let r = image_histogram(&blob_image(&mut rng, side)).map_err(js_err)?;
    let c = image_histogram(&blob_image(&mut rng, side)).map_err(js_err)?;
    // blob images have empty pixels; the regularized solvers need full support
    let r = smooth_marginals(&r, 1e-3).map_err(js_err)?;
    let c = smooth_marginals(&c, 1e-3).map_err(js_err)?;
    let cost = grid_cost(side, GridMetric::SqEuclidean).map_err(js_err)?;
    let prob = EntropicOTProblem::new(cost, gamma, r, c).map_err(js_err)?;
    let run = run_method(&prob, method, 1.0, OtStop::new(max_iters, tol)).map_err(js_err)?;
    Ok(run
        .trace
        .iter()
        .flat_map(|row| [row.iteration as f64, row.feas_l1, row.gap.abs()])
        .collect())
}

/// Accelerated alternating minimization on
/// `f(x) = 1/2 (x - c)^T Q (x - c)` in the plane, one coordinate per block.
///
/// `Q` has eigenvalues `1` and `kappa`, the larger along angle `theta`
/// (radians). Returns the iterates as `[x0, y0, x1, y1, ...]`.
pub fn aam_path_data(
    kappa: f64,
    theta: f64,
    start_x: f64,
    start_y: f64,
    adaptive: bool,
    iters: usize,
) -> DemoResult<Vec<f64>> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err("kappa must be at least 1".into());
    }
    let (s, c) = theta.sin_cos();
    let q = vec![
        kappa * c * c + s * s,
        (kappa - 1.0) * c * s,
        (kappa - 1.0) * c * s,
        kappa * s * s + c * c,
    ];
    let obj = Quadratic::new(q, vec![0.0, 0.0], vec![0..1, 1..2]).map_err(js_err)?;
    let variant = if adaptive {
        Variant::Adaptive
    } else {
        Variant::LineSearch
    };
    let mut state = SolverState::new(vec![start_x, start_y], 1.0);
    let mut path = state.x.clone();
    for _ in 0..iters {
        if aam_step(&obj, &mut state, variant).map_err(js_err)? == StepOutcome::Stationary {
            break;
        }
        path.extend_from_slice(&state.x);
    }
    Ok(path)
}

fn bump(n: usize, center: f64, width: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64 - center;
            (-0.5 * (t / width).powi(2)).exp() + 1e-6
        })
        .collect()
}

/// Barycenter of Gaussian bumps on `n` points of `[0, 1]` with squared
/// distance cost and uniform weights.
///
/// Returns `m + 1` rows of length `n`: the input measures, then the
/// barycenter, followed by the iteration count.
pub fn barycenter_1d_data(
    n: usize,
    centers: Vec<f64>,
    width: f64,
    gamma: f64,
    accelerated: bool,
    tol: f64,
    max_iters: usize,
) -> DemoResult<Vec<f64>> {
    if n < 2 || centers.is_empty() {
        return Err("need at least two points and one measure".into());
    }
    let measures = centers
        .iter()
        .map(|&m| Histogram::new(bump(n, m, width)))
        .collect::<otaccel::Result<Vec<_>>>()
        .map_err(js_err)?;
    let h = 1.0 / (n - 1) as f64;
    let entries = (0..n * n)
        .map(|k| ((k / n) as f64 - (k % n) as f64).powi(2) * h * h)
        .collect();
    let cost = CostMatrix::new(n, entries).map_err(js_err)?;
    let m = measures.len();
    let prob =
        BarycenterProblem::with_shared_cost(measures, cost, vec![1.0; m], gamma).map_err(js_err)?;
    let stop = OtStop::new(max_iters, tol);
    let run = if accelerated {
        run_accelerated_ibp(&prob, 1.0, stop)
    } else {
        run_ibp(&prob, stop)
    }
    .map_err(js_err)?;
    let mut out: Vec<f64> = prob
        .measures()
        .iter()
        .flat_map(|p| p.weights().to_vec())
        .collect();
    out.extend_from_slice(run.barycenter.weights());
    out.push(run.iterations() as f64);
    Ok(out)
}

fn to_js<T>(r: DemoResult<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ot_trace(
    method: &str,
    side: usize,
    seed: u32,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>, JsError> {
    to_js(ot_trace_data(method, side, seed, gamma, tol, max_iters))
}

#[wasm_bindgen]
pub fn aam_path(
    kappa: f64,
    theta: f64,
    start_x: f64,
    start_y: f64,
    adaptive: bool,
    iters: usize,
) -> Result<Vec<f64>, JsError> {
    to_js(aam_path_data(
        kappa, theta, start_x, start_y, adaptive, iters,
    ))
}

#[wasm_bindgen]
pub fn barycenter_1d(
    n: usize,
    centers: Vec<f64>,
    width: f64,
    gamma: f64,
    accelerated: bool,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>, JsError> {
    to_js(barycenter_1d_data(
        n,
        centers,
        width,
        gamma,
        accelerated,
        tol,
        max_iters,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ot_traces_end_at_tolerance() {
        for method in ["sinkhorn", "aam-sinkhorn", "apdagd-baseline"] {
            let t = ot_trace_data(method, 5, 3, 0.5, 1e-4, 100_000).unwrap();
            assert_eq!(t.len() % 3, 0);
            let last = &t[t.len() - 3..];
            assert!(last[1] <= 1e-4 && last[2] <= 1e-4, "{method}: {last:?}");
        }
        assert!(ot_trace_data("ibp", 5, 3, 0.5, 1e-4, 10).is_err());
    }

    #[test]
    fn aam_path_approaches_the_minimizer() {
        for adaptive in [false, true] {
            let p = aam_path_data(50.0, 0.7, 2.0, -1.0, adaptive, 200).unwrap();
            assert_eq!(&p[..2], &[2.0, -1.0]);
            let end = &p[p.len() - 2..];
            assert!(end[0].hypot(end[1]) < 1e-3, "{end:?}");
        }
        assert!(aam_path_data(0.5, 0.0, 1.0, 1.0, true, 5).is_err());
    }

    #[test]
    fn barycenter_of_shifted_bumps_sits_between_them() {
        let n = 41;
        for accelerated in [false, true] {
            let out =
                barycenter_1d_data(n, vec![0.25, 0.75], 0.05, 0.01, accelerated, 1e-6, 200_000)
                    .unwrap();
            assert_eq!(out.len(), 3 * n + 1);
            let bar = &out[2 * n..3 * n];
            let mean: f64 = bar
                .iter()
                .enumerate()
                .map(|(i, w)| w * i as f64 / (n - 1) as f64)
                .sum();
            assert!((mean - 0.5).abs() < 1e-3, "{mean}");
            assert!((bar.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
