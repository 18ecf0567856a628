use otaccel::aam::{BlockObjective, StepOutcome};
use otaccel::barycenter::{
    barycenter_estimate, ibp_v_update, project_v, BarycenterDualPoint, BarycenterProblem,
};
use otaccel::instances::{random_cost, random_histogram, random_integer_cost, sparse_histogram};
use otaccel::logmath::smooth_marginals;
use otaccel::oracle::exact_ot_bruteforce;
use otaccel::ot::{
    approximate_ot, ot_dual_gradient, primal_from_dual, round_to_polytope, ApproxOptions,
    EntropicOTProblem, OTDualPoint, TransportPlan,
};
use otaccel::pdaam::{pdaam_step, DualMethod, PrimalDualProblem, PrimalDualState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ot_instance(seed: u64, n: usize, gamma: f64) -> EntropicOTProblem {
    let mut g = rng(seed);
    let cost = random_cost(&mut g, n);
    let r = random_histogram(&mut g, n, 0.05);
    let c = random_histogram(&mut g, n, 0.05);
    EntropicOTProblem::new(cost, gamma, r, c).unwrap()
}

fn random_point(seed: u64, n: usize, scale: f64) -> OTDualPoint {
    let mut g = rng(seed);
    OTDualPoint {
        u: (0..n).map(|_| g.gen_range(-scale..scale)).collect(),
        v: (0..n).map(|_| g.gen_range(-scale..scale)).collect(),
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn dual_gradient_blocks_sum_to_zero(n in 2usize..10, gamma in 0.01f64..2.0, seed: u64) {
        let prob = ot_instance(seed, n, gamma);
        let (gu, gv) = ot_dual_gradient(&prob, &random_point(seed ^ 7, n, 10.0));
        prop_assert!(gu.iter().sum::<f64>().abs() < 1e-12 * gamma.max(1.0));
        prop_assert!(gv.iter().sum::<f64>().abs() < 1e-12 * gamma.max(1.0));
    }

    #[test]
    fn plan_has_unit_mass_and_ignores_shifts(
        n in 2usize..10, gamma in 0.01f64..2.0, seed: u64, s in -30.0f64..30.0, t in -30.0f64..30.0,
    ) {
        let prob = ot_instance(seed, n, gamma);
        let p = random_point(seed ^ 11, n, 20.0);
        let x = primal_from_dual(&prob, &p);
        prop_assert!(x.entries().iter().all(|e| *e >= 0.0));
        prop_assert!((x.total() - 1.0).abs() < 1e-12);
        let q = OTDualPoint {
            u: p.u.iter().map(|a| a + s).collect(),
            v: p.v.iter().map(|a| a + t).collect(),
        };
        let y = primal_from_dual(&prob, &q);
        prop_assert!(l1(x.entries(), y.entries()) < 1e-11);
    }

    #[test]
    fn rounding_moves_at_most_twice_the_marginal_error(n in 2usize..10, seed: u64, p_zero in 0.0f64..0.8) {
        let mut g = rng(seed);
        let x = random_histogram(&mut g, n * n, 0.0).into_weights();
        let r = sparse_histogram(&mut g, n, p_zero);
        let c = sparse_histogram(&mut g, n, p_zero);
        let plan = TransportPlan::new(n, x).unwrap();
        let out = round_to_polytope(&plan, &r, &c).unwrap();
        let err = plan.marginal_error_l1(r.weights(), c.weights());
        prop_assert!(l1(out.entries(), plan.entries()) <= 2.0 * err + 1e-12);
        prop_assert!(out.is_in_polytope());
    }

    #[test]
    fn smoothing_stays_close_and_interior(n in 1usize..20, seed: u64, eps in 1e-6f64..1.0, p_zero in 0.0f64..0.9) {
        let r = sparse_histogram(&mut rng(seed), n, p_zero);
        let s = smooth_marginals(&r, eps).unwrap();
        prop_assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.min() >= eps / (8.0 * n as f64) * (1.0 - 1e-12));
        prop_assert!(l1(s.weights(), r.weights()) <= eps / 4.0 * (1.0 + 1e-12));
    }

    #[test]
    fn barycenter_v_update_equalizes_columns(m in 2usize..5, n in 2usize..8, gamma in 0.05f64..1.0, seed: u64) {
        let mut g = rng(seed);
        let measures = (0..m).map(|_| random_histogram(&mut g, n, 0.05)).collect();
        let costs = (0..m).map(|_| random_cost(&mut g, n)).collect();
        let weights: Vec<f64> = (0..m).map(|_| g.gen_range(0.1..1.0)).collect();
        let prob = BarycenterProblem::new(measures, costs, weights, gamma).unwrap();
        let w = prob.weights().to_vec();
        let mut x: Vec<f64> = (0..2 * m * n).map(|_| g.gen_range(-3.0..3.0)).collect();
        project_v(&w, n, &mut x);
        let p = BarycenterDualPoint::from_flat(&x, m, n);
        let q = ibp_v_update(&prob, &p).unwrap();
        prop_assert!(q.u == p.u);
        let flat = q.to_flat();
        let grad = prob.gradient(&flat);
        // the projected v-gradient vanishes when all column marginals agree
        prop_assert!(grad[m * n..].iter().all(|x| x.abs() < 1e-12));
        prop_assert!(prob.value(&flat) <= prob.value(&x) + 1e-12);
        let plans: Vec<Vec<f64>> = prob.primal_from_dual(&flat).chunks(n * n).map(<[f64]>::to_vec).collect();
        let q_hat = barycenter_estimate(&plans, &w).unwrap();
        for plan in &plans {
            let cols: Vec<f64> = (0..n).map(|j| (0..n).map(|i| plan[i * n + j]).sum()).collect();
            prop_assert!(l1(&cols, q_hat.weights()) < 1e-12);
        }
    }

    #[test]
    fn primal_average_stays_in_simplex(n in 2usize..8, gamma in 0.05f64..1.0, seed: u64, steps in 1usize..40) {
        let prob = ot_instance(seed, n, gamma);
        let mut state = PrimalDualState::from_problem(&prob, 1.0);
        for _ in 0..steps {
            let out = pdaam_step(&prob, &mut state, DualMethod::Adaptive).unwrap();
            prop_assert!(state.x_hat.iter().all(|e| *e >= 0.0));
            prop_assert!((state.x_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if out == StepOutcome::Stationary {
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exact_cost_bounds_every_feasible_plan(n in 2usize..5, seed: u64) {
        let mut g = rng(seed);
        let cost = random_integer_cost(&mut g, n, 5);
        let r = sparse_histogram(&mut g, n, 0.3);
        let c = sparse_histogram(&mut g, n, 0.3);
        let exact = exact_ot_bruteforce(&cost, &r, &c).unwrap();
        let x = random_histogram(&mut g, n * n, 0.0).into_weights();
        let feasible = round_to_polytope(&TransportPlan::new(n, x).unwrap(), &r, &c).unwrap();
        prop_assert!(exact.optimal_cost <= cost.dot(feasible.entries()) + 1e-12);
        let approx = approximate_ot(&cost, &r, &c, 0.1, ApproxOptions::default()).unwrap();
        prop_assert!(exact.optimal_cost <= approx.cost + 1e-12);
        prop_assert!(approx.cost <= exact.optimal_cost + 0.1);
    }
}
