use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use otaccel::instances::{blob_image, random_histogram, random_integer_cost};
use otaccel::oracle::exact_ot_bruteforce;
use otaccel_cli::bench::{cmd_bench, BenchSpec, Problem};
use otaccel_cli::commands::{cmd_barycenter, cmd_ot, CostSource};
use otaccel_cli::io::{load_histogram, HistogramFormat, Summary};
use otaccel_cli::{GammaSpec, Method, Metric, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(out: &Path) -> RunConfig {
    RunConfig {
        method: None,
        gamma: GammaSpec::Auto,
        eps: 0.01,
        max_iters: 100_000,
        l0: 1.0,
        seed: 0,
        smooth: None,
        out: out.to_path_buf(),
        check_interval: 1,
        workers: 1,
    }
}

fn write_csv(dir: &Path, name: &str, rows: &[Vec<f64>]) -> PathBuf {
    let body: String = rows
        .iter()
        .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn num(s: &Summary, key: &str) -> f64 {
    s.get(key)
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/digits")
}

#[test]
fn zero_cost_succeeds_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let r = write_csv(dir.path(), "r.csv", &[vec![0.2, 0.3, 0.5]]);
    let c = write_csv(dir.path(), "c.csv", &[vec![0.6, 0.2, 0.2]]);
    let cost = write_csv(dir.path(), "cost.csv", &vec![vec![0.0; 3]; 3]);
    let s = cmd_ot(
        &config(&dir.path().join("out")),
        &r,
        &c,
        &CostSource::File(cost),
    )
    .unwrap();
    assert_eq!(num(&s, "cost"), 0.0);
    assert_eq!(num(&s, "iterations"), 1.0);
    assert_eq!(s.get("status"), Some("converged"));
}

#[test]
fn small_integer_instances_match_the_oracle() {
    for seed in 0..5 {
        let dir = tempfile::tempdir().unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let cost = random_integer_cost(&mut g, 3, 5);
        let (r, c) = (
            random_histogram(&mut g, 3, 0.0),
            random_histogram(&mut g, 3, 0.0),
        );
        let rows: Vec<Vec<f64>> = cost.entries().chunks(3).map(<[f64]>::to_vec).collect();
        let cost_path = write_csv(dir.path(), "cost.csv", &rows);
        let rp = write_csv(dir.path(), "r.csv", &[r.weights().to_vec()]);
        let cp = write_csv(dir.path(), "c.csv", &[c.weights().to_vec()]);
        let cfg = RunConfig {
            eps: 0.05,
            ..config(&dir.path().join("out"))
        };
        let s = cmd_ot(&cfg, &rp, &cp, &CostSource::File(cost_path)).unwrap();
        // the CSV round trip renormalizes, so compare against the loaded marginals
        let r = load_histogram(&rp, HistogramFormat::Csv, None).unwrap();
        let c = load_histogram(&cp, HistogramFormat::Csv, None).unwrap();
        let exact = exact_ot_bruteforce(&cost, &r, &c).unwrap().optimal_cost;
        let got = num(&s, "cost");
        assert!(
            got <= exact + 0.05 && got >= exact - 1e-12,
            "{got} vs {exact}"
        );
        assert!(num(&s, "plan_marginal_error_l1") < 1e-12);
    }
}

#[test]
fn trace_has_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for method in [
        Method::Sinkhorn,
        Method::AamSinkhorn,
        Method::ApdagdBaseline,
    ] {
        let cfg = RunConfig {
            method: Some(method),
            ..config(&out)
        };
        let s = cmd_ot(
            &cfg,
            &corpus().join("blob0.pgm"),
            &corpus().join("blob1.pgm"),
            &CostSource::Grid(Metric::SqEuclidean),
        )
        .unwrap();
        let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
        let lines: Vec<&str> = trace.lines().collect();
        assert_eq!(lines[0], "iter,seconds,dual,feas_l1,gap,L,A");
        assert_eq!(lines.len(), num(&s, "iterations") as usize + 1);
        let iters: Vec<usize> = lines[1..]
            .iter()
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(iters.windows(2).all(|w| w[0] < w[1]));
        let saved = Summary::parse(&fs::read_to_string(out.join("summary.txt")).unwrap());
        assert_eq!(saved, s);
        let plan = fs::read_to_string(out.join("plan.csv")).unwrap();
        assert_eq!(plan.lines().count(), 64);
    }
}

#[test]
fn fixed_gamma_requires_positive_marginals_unless_smoothed() {
    let dir = tempfile::tempdir().unwrap();
    let r = write_csv(dir.path(), "r.csv", &[vec![0.0, 1.0, 1.0, 2.0]]);
    let c = write_csv(dir.path(), "c.csv", &[vec![1.0, 1.0, 1.0, 1.0]]);
    let cfg = RunConfig {
        gamma: GammaSpec::Fixed(0.5),
        eps: 1e-6,
        ..config(&dir.path().join("out"))
    };
    let grid = CostSource::Grid(Metric::L1);
    assert_eq!(cmd_ot(&cfg, &r, &c, &grid).unwrap_err().exit_code(), 3);
    let smoothed = RunConfig {
        smooth: Some(0.1),
        ..cfg
    };
    let s = cmd_ot(&smoothed, &r, &c, &grid).unwrap();
    assert!(num(&s, "feas_l1") <= 1e-6);
}

fn write_images(dir: &Path, seeds: &[u64], side: usize) -> Vec<PathBuf> {
    seeds
        .iter()
        .map(|&s| {
            let px = blob_image(&mut ChaCha8Rng::seed_from_u64(s), side);
            let vals: Vec<f64> = px.iter().map(|&p| p as f64 + 1.0).collect();
            write_csv(dir, &format!("m{s}.csv"), &[vals])
        })
        .collect()
}

#[test]
fn barycenter_solvers_agree() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_images(dir.path(), &[1, 2, 3], 4);
    let mut duals = Vec::new();
    let mut bars = Vec::new();
    for method in [Method::Ibp, Method::AamIbp] {
        let out = dir.path().join(method.name());
        let cfg = RunConfig {
            method: Some(method),
            gamma: GammaSpec::Fixed(0.1),
            eps: 1e-8,
            max_iters: 500_000,
            ..config(&out)
        };
        let s = cmd_barycenter(&cfg, &paths, &CostSource::Grid(Metric::SqEuclidean), None).unwrap();
        duals.push(num(&s, "dual"));
        for l in 0..3 {
            assert!(num(&s, &format!("measure_{l}_row_error_l1")) < 1e-6);
        }
        let bar: Vec<f64> = fs::read_to_string(out.join("barycenter.csv"))
            .unwrap()
            .lines()
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(bar.len(), 16);
        bars.push(bar);
    }
    assert!((duals[0] - duals[1]).abs() < 1e-6, "{duals:?}");
    let diff: f64 = bars[0]
        .iter()
        .zip(&bars[1])
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(diff < 1e-5, "{diff}");
}

#[test]
fn identical_measures_give_a_common_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_images(dir.path(), &[9], 3).remove(0);
    let out = dir.path().join("out");
    let cfg = RunConfig {
        method: Some(Method::Ibp),
        gamma: GammaSpec::Fixed(0.2),
        eps: 1e-10,
        ..config(&out)
    };
    let s = cmd_barycenter(
        &cfg,
        &[p.clone(), p.clone(), p],
        &CostSource::Grid(Metric::L1),
        Some("1,2,3"),
    )
    .unwrap();
    // every plan has the same column marginal, which is the estimate
    for l in 0..3 {
        assert!(num(&s, &format!("measure_{l}_col_error_l1")) < 1e-9);
    }
}

#[test]
fn barycenter_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", &[vec![1.0; 4]]);
    let b = write_csv(dir.path(), "b.csv", &[vec![1.0; 9]]);
    let cfg = config(&dir.path().join("out"));
    let grid = CostSource::Grid(Metric::SqEuclidean);
    assert_eq!(
        cmd_barycenter(&cfg, &[a.clone(), b], &grid, None)
            .unwrap_err()
            .exit_code(),
        3
    );
    assert_eq!(
        cmd_barycenter(&cfg, &[a.clone(), a.clone()], &grid, Some("1"))
            .unwrap_err()
            .exit_code(),
        3
    );
    let ot = RunConfig {
        method: Some(Method::Sinkhorn),
        ..cfg
    };
    assert_eq!(
        cmd_barycenter(&ot, &[a.clone(), a], &grid, None)
            .unwrap_err()
            .exit_code(),
        3
    );
}

fn bench_spec(instances: usize) -> BenchSpec {
    BenchSpec {
        problem: Problem::Ot,
        instances,
        side: 8,
        measures: 3,
        targets: vec![],
    }
}

#[test]
fn bench_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = BenchSpec {
        targets: vec![0.1, 0.05],
        ..bench_spec(3)
    };
    let mut outputs = Vec::new();
    for (k, workers) in [1, 3, 1].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let cfg = RunConfig {
            workers,
            seed: 42,
            ..config(&out)
        };
        let s = cmd_bench(&cfg, &spec).unwrap();
        outputs.push((fs::read(out.join("bench.csv")).unwrap(), s));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("instance,method,eps,iter,dual,feas_l1,gap,L,A\n"));
    for method in ["sinkhorn", "aam-sinkhorn", "apdagd-baseline"] {
        assert!(csv.contains(&format!(",{method},0.05,")));
    }
}

#[test]
fn bench_accelerated_sinkhorn_needs_fewer_iterations_on_average() {
    let dir = tempfile::tempdir().unwrap();
    let s = cmd_bench(&config(dir.path()), &bench_spec(5)).unwrap();
    let sinkhorn = num(&s, "sinkhorn.eps_0.01.iterations_mean");
    let accelerated = num(&s, "aam-sinkhorn.eps_0.01.iterations_mean");
    assert!(accelerated < sinkhorn, "{accelerated} vs {sinkhorn}");
}

#[test]
fn bench_barycenter_batch() {
    let dir = tempfile::tempdir().unwrap();
    let spec = BenchSpec {
        problem: Problem::Barycenter,
        side: 4,
        targets: vec![1e-3],
        ..bench_spec(2)
    };
    let s = cmd_bench(&config(dir.path()), &spec).unwrap();
    assert_eq!(s.get("ibp.eps_0.001.converged"), Some("2/2"));
    assert_eq!(s.get("aam-ibp.eps_0.001.converged"), Some("2/2"));
}

#[test]
fn empty_batch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        cmd_bench(&config(dir.path()), &bench_spec(0))
            .unwrap_err()
            .exit_code(),
        3
    );
}

#[test]
fn corpus_images_load() {
    for k in 0..6 {
        let h = load_histogram(
            &corpus().join(format!("blob{k}.pgm")),
            HistogramFormat::Pgm,
            None,
        )
        .unwrap();
        assert_eq!(h.len(), 64);
    }
}

fn otaccel(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_otaccel"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_csv(d, "a.csv", &[vec![1.0, 1.0, 1.0, 1.0]]);
    write_csv(d, "b.csv", &[vec![4.0], vec![1.0], vec![1.0], vec![2.0]]);

    let (code, stdout) = otaccel(&["ot", "--r", "a.csv", "--c", "b.csv", "--eps", "0.05"], d);
    assert_eq!(code, 0);
    assert!(Summary::parse(&stdout).get("cost").is_some());
    assert_eq!(
        otaccel(&["ot", "--r", "missing.csv", "--c", "b.csv"], d).0,
        1
    );
    assert_eq!(
        otaccel(
            &["ot", "--r", "a.csv", "--c", "b.csv", "--max-iters", "2"],
            d
        )
        .0,
        2
    );
    assert_eq!(
        otaccel(&["ot", "--r", "a.csv", "--c", "b.csv", "--eps", "-1"], d).0,
        3
    );
    assert_eq!(otaccel(&["ot", "--frobnicate"], d).0, 3);
    assert_eq!(otaccel(&["--help"], d).0, 0);
    assert_eq!(otaccel(&["gradcheck", "--points", "5"], d).0, 0);
}
