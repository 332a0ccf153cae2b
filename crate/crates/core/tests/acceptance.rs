//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances are fixed here and nowhere else.
//!
//! cargo test --release --test acceptance

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gaussrf::analysis::{condition_compare, paired_bound_check};
use gaussrf::experiments::{
    cos_samples, response_table, run_table1, run_table2, run_table3, ExperimentConfig,
};
use gaussrf::gaussian::{build_v, build_v_homogeneous, GaussianOperatorSpec};
use gaussrf::operator::dense_solve;
use gaussrf::recfilter::{apply_filter, build_lu, materialize_homogeneous, FilterCoefficients};
use gaussrf::var3d::{assemble_psi, assimilate, primal_solve, Backend, ObsOperator, VarProblem};
use gaussrf::{DenseOperator, DiagonalOperator, FilterSpec, Grid1D, Signal};

const TABLE1_TOL: f64 = 0.05;
const TABLE2_TOL: f64 = 0.10;
const TABLE3_TOL: f64 = 0.10;
const NORM_BOUND: f64 = 1.0 + 1e-9;
const LU_TOL: f64 = 1e-10;
const ASSIM_TOL: f64 = 1e-8;
// the two bounds coincide when ||V|| = ||F|| = 1; ||F|| may exceed 1 by an ulp
const BOUND_ORDER_SLACK: f64 = 1e-12;
// with Psi = c I both systems are the same matrix built in a different order
const COND_ROUNDING: f64 = 1e-10;

const TABLE1: [(f64, f64, f64); 3] = [(5.0, 0.9920, 0.9897), (20.0, 0.9012, 0.8537), (50.0, 0.9489, 0.8950)];
const TABLE2: [(f64, [f64; 3]); 4] = [
    (5.0, [0.2977, 0.3800, 0.5346]),
    (10.0, [0.3895, 0.4397, 0.5890]),
    (25.0, [0.4533, 0.4758, 0.6221]),
    (50.0, [0.4686, 0.4809, 0.6125]),
];
const TABLE3_RF1: [(usize, f64); 6] = [(1, 0.211), (2, 0.13), (5, 0.078), (50, 0.048), (100, 0.0429), (500, 0.0414)];
const TABLE3_RF3: f64 = 0.0424;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn rel_inf(a: &Signal, b: &Signal) -> f64 {
    let scale = b.inf_norm();
    let diff = a.sub(b).inf_norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn cfg(use_q: bool) -> ExperimentConfig {
    ExperimentConfig {
        use_q: Some(use_q),
        ..Default::default()
    }
}

fn col(t: &gaussrf::experiments::Table, name: &str) -> Vec<Option<f64>> {
    t.column_f64(name).expect("column present")
}

fn table3() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut rf1_ok = true;
    let mut rf3_ok = false;
    for use_q in [false, true] {
        let t = run_table3(&cfg(use_q)).expect("table3");
        let rf1 = col(&t, "rf1");
        let rf3 = col(&t, "rf3")[0].unwrap();
        let hit = rel(rf3, TABLE3_RF3) <= TABLE3_TOL;
        rf3_ok |= hit;
        lines.push(format!("rf3(use_q={use_q}) {rf3:.4} vs {TABLE3_RF3} [{}]", mark(hit)));
        if !use_q {
            for ((k, want), got) in TABLE3_RF1.iter().zip(rf1) {
                let got = got.unwrap();
                let ok = rel(got, *want) <= TABLE3_TOL;
                rf1_ok &= ok;
                lines.push(format!("rf1 K={k} {got:.4} vs {want} [{}]", mark(ok)));
            }
        }
    }
    let fast = start.elapsed() < Duration::from_secs(60);
    lines.push(format!("runtime {:.2?}", start.elapsed()));
    Outcome {
        pass: rf1_ok && rf3_ok && fast,
        detail: lines.join("; "),
    }
}

fn table1() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut all_ok = true;
    // third-order column with q(sigma); the raw-sigma values are reported
    let with_q = run_table1(&cfg(true)).expect("table1");
    let raw = run_table1(&cfg(false)).expect("table1");
    for (i, (sigma, want1, want3)) in TABLE1.iter().enumerate() {
        let f1 = col(&with_q, "rf1_k1")[i].unwrap();
        let f3 = col(&with_q, "rf3")[i].unwrap();
        let f3_raw = col(&raw, "rf3")[i].unwrap();
        let ok1 = rel(f1, *want1) <= TABLE1_TOL;
        let ok3 = rel(f3, *want3) <= TABLE1_TOL;
        all_ok &= ok1 && ok3;
        lines.push(format!(
            "sigma={sigma}: F1 {f1:.4} vs {want1} [{}], F3 {f3:.4} vs {want3} [{}] (raw sigma {f3_raw:.4})",
            mark(ok1),
            mark(ok3)
        ));
    }
    let fast = start.elapsed() < Duration::from_secs(30);
    lines.push(format!("runtime {:.2?}", start.elapsed()));
    Outcome {
        pass: all_ok && fast,
        detail: lines.join("; "),
    }
}

fn table2() -> Outcome {
    let start = Instant::now();
    let t = run_table2(&cfg(true)).expect("table2");
    let raw = run_table2(&cfg(false)).expect("table2");
    let mut lines = Vec::new();
    let mut all_ok = true;
    for (i, (sigma, want)) in TABLE2.iter().enumerate() {
        let got = [
            col(&t, "rf1_k1")[i].unwrap(),
            col(&t, "rf1_k50")[i].unwrap(),
            col(&t, "rf3")[i].unwrap(),
        ];
        let worst = got.iter().zip(want).map(|(g, w)| rel(*g, *w)).fold(0.0, f64::max);
        all_ok &= worst <= TABLE2_TOL;
        lines.push(format!(
            "sigma={sigma}: {:.4}/{:.4}/{:.4} worst rel {worst:.3} (rf3 raw sigma {:.4})",
            got[0],
            got[1],
            got[2],
            col(&raw, "rf3")[i].unwrap()
        ));
    }
    let fast = start.elapsed() < Duration::from_secs(120);
    lines.push(format!("runtime {:.2?}", start.elapsed()));
    Outcome {
        pass: all_ok && fast,
        detail: lines.join("; "),
    }
}

fn norm_bound() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for m in [101, 301, 601] {
        for sigma in [2.0, 5.0, 10.0, 20.0, 50.0] {
            let mut specs: Vec<FilterSpec> = [1, 5, 50].map(FilterSpec::first).to_vec();
            specs.push(FilterSpec::third(false));
            specs.push(FilterSpec::third(true));
            for spec in specs {
                let f = materialize_homogeneous(m, sigma, &spec).expect("materialize");
                worst = worst.max(f.inf_norm());
                cases += 1;
            }
        }
    }
    Outcome {
        pass: worst <= NORM_BOUND,
        detail: format!("{cases} operators, max ||F||_inf = {worst:.15}"),
    }
}

fn random_grid(rng: &mut ChaCha8Rng, m: usize) -> Grid1D {
    if rng.random_bool(0.5) {
        Grid1D::uniform(m, rng.random_range(1.0..30.0)).unwrap()
    } else {
        let dx: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
        let radius: Vec<f64> = (0..m).map(|_| rng.random_range(2.0..20.0)).collect();
        Grid1D::new(dx, radius).unwrap()
    }
}

fn lu_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.random_range(10..150);
        let grid = random_grid(&mut rng, m);
        let spec = if rng.random_bool(0.5) {
            FilterSpec::first(rng.random_range(1..8))
        } else {
            FilterSpec::third(rng.random_bool(0.5))
        };
        let coeffs = FilterCoefficients::compute(&grid, &spec).unwrap();
        let s0 = Signal::from_fn(m, |_| rng.random_range(-1.0..1.0));
        let swept = apply_filter(&s0, &coeffs, &spec).unwrap();
        let lu = build_lu(&coeffs);
        let mut dense = s0.clone();
        for _ in 0..spec.iterations {
            dense = dense_solve(&lu.lower, &dense).unwrap();
            dense = dense_solve(&lu.upper, &dense).unwrap();
        }
        worst = worst.max(rel_inf(&swept, &dense));
    }
    Outcome {
        pass: worst <= LU_TOL,
        detail: format!("50 instances, worst relative gap {worst:.2e}"),
    }
}

fn random_problem(rng: &mut ChaCha8Rng, max_m: usize, sigma_b_max: f64) -> VarProblem {
    let m = rng.random_range(20..=max_m);
    let sigma = rng.random_range(1.0..15.0);
    let n_obs = rng.random_range(1..=m);
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, m, n_obs).into_vec();
    idx.sort_unstable();
    let r: Vec<f64> = (0..n_obs).map(|_| rng.random_range(0.05..2.0)).collect();
    let d: Vec<f64> = (0..n_obs).map(|_| rng.random_range(-2.0..2.0)).collect();
    let sigma_b = rng.random_range(0.5..=sigma_b_max);
    VarProblem::new(
        Grid1D::uniform(m, sigma).unwrap(),
        ObsOperator::new(m, idx).unwrap(),
        r,
        d,
        Backend::Exact,
    )
    .unwrap()
    .with_sigma_b(sigma_b)
    .unwrap()
}

fn theorem_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut steps, mut violations, mut order_breaks) = (0, 0, 0);
    let mut tightest = 0.0f64;
    for _ in 0..100 {
        // the specialized bound assumes ||V|| <= 1, hence sigma_b <= 1
        let prob = random_problem(&mut rng, 200, 1.0);
        let spec = if rng.random_bool(0.5) {
            FilterSpec::first(rng.random_range(1..10))
        } else {
            FilterSpec::third(rng.random_bool(0.5))
        };
        let check = paired_bound_check(&prob, spec, 1e-10, prob.len()).unwrap();
        for s in &check.steps {
            steps += 1;
            violations += usize::from(!s.holds());
            order_breaks += usize::from(s.theorem > s.specialized * (1.0 + BOUND_ORDER_SLACK));
            tightest = tightest.max(s.measured / s.theorem);
        }
    }
    Outcome {
        pass: violations == 0 && order_breaks == 0,
        detail: format!(
            "100 problems, {steps} steps, {violations} bound violations, {order_breaks} theorem>specialized, max measured/bound {tightest:.3}"
        ),
    }
}

fn dense_dual_oracle(prob: &VarProblem) -> Signal {
    let v = build_v(&GaussianOperatorSpec::new(prob.grid.clone()))
        .unwrap()
        .scale(prob.sigma_b);
    let m = prob.len();
    let mut psi = vec![0.0; m];
    let mut g = vec![0.0; m];
    for (k, &i) in prob.obs.indices().iter().enumerate() {
        psi[i] = 1.0 / prob.r_diag[k];
        g[i] = prob.misfit[k] / prob.r_diag[k];
    }
    let psi = DiagonalOperator::new(psi).unwrap().to_dense();
    let a = DenseOperator::identity(m).add(&v.matmul(&psi).unwrap().matmul(&v).unwrap()).unwrap();
    let rhs = v.mat_vec(&Signal::new(g)).unwrap();
    v.mat_vec(&dense_solve(&a, &rhs).unwrap()).unwrap()
}

fn assimilation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for _ in 0..20 {
        let prob = random_problem(&mut rng, 200, 2.0);
        let got = assimilate(&prob, 1e-13, 10 * prob.len()).unwrap().increment;
        worst = worst.max(rel_inf(&got, &dense_dual_oracle(&prob)));

        let mut still = prob.clone();
        still.misfit.iter_mut().for_each(|d| *d = 0.0);
        for backend in [Backend::Exact, Backend::Rf1 { iterations: 3 }, Backend::Rf3 { use_q: true }] {
            let inc = assimilate(&still.with_backend(backend), 1e-10, still.len()).unwrap().increment;
            zero_ok &= inc.iter().all(|&x| x == 0.0);
        }
    }
    Outcome {
        pass: worst <= ASSIM_TOL && zero_ok,
        detail: format!("20 instances, worst relative gap {worst:.2e}, zero misfit gives zero increment: {zero_ok}"),
    }
}

fn conditioning() -> Outcome {
    let mut lines = Vec::new();
    let (mut holds, mut total, mut below4) = (0, 0, 0);
    let mut iter_ok = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [50, 100, 200] {
        for sigma in [2.0, 5.0, 10.0] {
            // regular spacing 1, 2, 5 (stride 0: m/4 random points), r in {1, 0.01}
            for (stride, r) in [1, 2, 5, 0].into_iter().flat_map(|s| [(s, 1.0), (s, 0.01)]) {
                let idx: Vec<usize> = if stride == 0 {
                    let mut v = rand::seq::index::sample(&mut rng, m, m / 4).into_vec();
                    v.sort_unstable();
                    v
                } else {
                    (0..m).step_by(stride).collect()
                };
                let n = idx.len();
                let prob = VarProblem::new(
                    Grid1D::uniform(m, sigma).unwrap(),
                    ObsOperator::new(m, idx).unwrap(),
                    vec![r; n],
                    (0..n).map(|i| (i as f64 * 0.7).sin()).collect(),
                    Backend::Exact,
                )
                .unwrap();
                let v = build_v_homogeneous(m, sigma).unwrap();
                let c = condition_compare(&v, &assemble_psi(&prob)).unwrap();
                let ok = c.dual <= c.primal * (1.0 + COND_ROUNDING);
                holds += usize::from(ok);
                below4 += usize::from(c.dual < 4.0);
                total += 1;
                let it_d = assimilate(&prob, 1e-8, m).unwrap().report.iterations;
                let it_p = primal_solve(&prob, 1e-8, m).unwrap().report.iterations;
                iter_ok += usize::from(it_d <= it_p);
                if !ok {
                    lines.push(format!(
                        "m={m} sigma={sigma} stride={stride} r={r}: dual {:.4} > primal {:.4}",
                        c.dual, c.primal
                    ));
                }
            }
        }
    }
    lines.insert(
        0,
        format!(
            "{holds}/{total} configurations with mu(dual) <= mu(primal); mu(dual) < 4 in {below4}/{total} (logged); dual CG iterations <= primal in {iter_ok}/{total} (logged)"
        ),
    );
    Outcome {
        pass: holds == total,
        detail: lines.join("; "),
    }
}

fn cos_left_half() -> Outcome {
    let (xs, s0) = cos_samples(252);
    let half = xs.len() / 2;
    let mad = |t: &gaussrf::experiments::Table, name: &str| -> f64 {
        let v = col(t, "v");
        let c = col(t, name);
        (0..half).map(|i| (c[i].unwrap() - v[i].unwrap()).abs()).sum::<f64>() / half as f64
    };
    let with_q = response_table(&xs, &s0, 15.0, &[1], true).unwrap();
    let raw = response_table(&xs, &s0, 15.0, &[1], false).unwrap();
    let (rf1, rf3) = (mad(&with_q, "rf1_k1"), mad(&with_q, "rf3"));
    Outcome {
        pass: rf3 < rf1,
        detail: format!(
            "sigma=15 left-half MAD: F3 {rf3:.5} vs F1 {rf1:.5} (F3 with raw sigma {:.5})",
            mad(&raw, "rf3")
        ),
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out"
    }
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("1 trimmed distances (edge study)", table3),
        ("2 one-pass operator norms", table1),
        ("3 filter-to-exact distances", table2),
        ("4 norm bound over config grid", norm_bound),
        ("5 sweep / LU equivalence", lu_equivalence),
        ("6 per-step CG perturbation bound", theorem_bound),
        ("7 assimilation vs dense dual solve", assimilation_oracle),
        ("8 dual vs primal conditioning", conditioning),
        ("9 cosine left-half accuracy", cos_left_half),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        failed += usize::from(!out.pass);
        println!(
            "criterion {name}: {} ({:.2?}) {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
