//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::{ari, jac, mean, Prepared};
use sdfclust::basis::BasisSystem;
use sdfclust::cluster::{select_k_elbow, selection_curves, selection_matrix, FeatureKind};
use sdfclust::estimator::{
    basis_derivatives, degrees_of_freedom, fit, neighbor_deviations, objective, pen1, pen2,
    score_derivatives, trace_is_monotone, FitOptions, Lambdas, ModelFit, Problem,
};
use sdfclust::lattice::{GridField, NeighborGraph};
use sdfclust::metrics::{
    adjusted_rand, column_ordered, isolated_subregions, jaccard, pair_counts, Partition,
};
use sdfclust::simulate::{
    bessel_k, covariance_matrix, matern_cov, sample_grf, MaternParams, Scenario,
};
use sdfclust::spectrum::{periodogram_2d, periodogram_set, PeriodogramSet};

const REPLICATES: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Every fit produced by the suite, for the descent check.
#[derive(Default)]
struct Fits {
    traces: Vec<(String, ModelFit)>,
}

impl Fits {
    fn keep(&mut self, name: String, f: ModelFit) -> ModelFit {
        self.traces.push((name, f.clone()));
        f
    }
}

fn p1_recovery(fits: &mut Fits, elbow: &mut Vec<usize>) -> Outcome {
    let (mut a, mut j) = (vec![], vec![]);
    for seed in 1..=REPLICATES {
        let s = Scenario::p1(30, 40, seed).unwrap();
        let p = Prepared::new(&s);
        let sel = selection_matrix(&p.periodograms, &p.basis).unwrap();
        let (wss, _) = selection_curves(&sel, 10).unwrap();
        elbow.push(select_k_elbow(&wss).unwrap());

        let f = fits.keep(format!("p1 seed {seed}"), p.fit(3, false));
        let labels = p.labels(FeatureKind::WeightedScores, Some(&f), 3);
        let truth = s.true_labels.as_ref().unwrap();
        a.push(ari(&labels, truth));
        j.push(jac(&labels, truth));
    }
    let (ma, mj) = (mean(&a), mean(&j));
    outcome(
        ma >= 0.98 && mj >= 0.98,
        format!("mean ARI {ma:.4}, mean Jaccard {mj:.4}"),
    )
}

fn p2_ordering(fits: &mut Fits) -> Outcome {
    let (mut astar, mut spb, mut sep) = (vec![], vec![], vec![]);
    for seed in 1..=REPLICATES {
        let s = Scenario::p2(30, 40, seed).unwrap();
        let p = Prepared::new(&s);
        let f = fits.keep(format!("p2 seed {seed}"), p.fit(3, false));
        let truth = s.true_labels.as_ref().unwrap();
        astar.push(ari(
            &p.labels(FeatureKind::WeightedScores, Some(&f), 3),
            truth,
        ));
        spb.push(ari(&p.labels(FeatureKind::Spb, None, 3), truth));
        sep.push(ari(&p.labels(FeatureKind::Sep, None, 3), truth));
    }
    let (a, b, c) = (mean(&astar), mean(&spb), mean(&sep));
    outcome(
        a > b && a > c && a >= 0.80,
        format!("mean ARI weighted scores {a:.4}, SPB {b:.4}, separate {c:.4}"),
    )
}

fn elbow_selection(elbow: &[usize]) -> Outcome {
    let hits = elbow.iter().filter(|&&k| k == 3).count();
    outcome(
        hits >= 8,
        format!(
            "k = 3 in {hits}/{} replicates, picks {elbow:?}",
            elbow.len()
        ),
    )
}

fn spatial_homogeneity(fits: &mut Fits) -> Outcome {
    let mut fewer = 0;
    let mut ordered = true;
    let mut counts = vec![];
    for seed in 1..=REPLICATES {
        let s = Scenario::gradient(10, 20, 24, seed).unwrap();
        let p = Prepared::new(&s);
        let mut iso = [0; 2];
        for (slot, spatial) in [false, true].into_iter().enumerate() {
            let f = fits.keep(
                format!("gradient seed {seed} spatial {spatial}"),
                p.fit(4, spatial),
            );
            let labels = p.labels(FeatureKind::WeightedScores, Some(&f), 4);
            iso[slot] = isolated_subregions(&labels, &p.graph).unwrap();
            ordered &= column_ordered(&labels, s.cols).unwrap();
        }
        if iso[1] < iso[0] {
            fewer += 1;
        }
        counts.push((iso[0], iso[1]));
    }
    outcome(
        fewer >= 7 && ordered,
        format!(
            "fewer isolated with spatial penalty on {fewer}/{REPLICATES} seeds, all column-ordered: {ordered}, (off, on) = {counts:?}"
        ),
    )
}

fn random_instance(
    rng: &mut ChaCha8Rng,
) -> (
    PeriodogramSet,
    BasisSystem,
    NeighborGraph,
    DMatrix<f64>,
    DMatrix<f64>,
) {
    let side = rng.random_range(5..=8);
    let (rows, cols) = [(1, 2), (2, 2), (1, 4), (2, 3), (3, 2), (1, 6)][rng.random_range(0..6)];
    let m = rows * cols;
    let k = rng.random_range(1..=2);
    let basis = BasisSystem::new(side, 4).unwrap();
    let raw: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..side * side)
                .map(|_| -rng.random_range(1e-3f64..1.0).ln() * rng.random_range(0.5..3.0))
                .collect()
        })
        .collect();
    let p = PeriodogramSet::from_raw(side, &raw).unwrap();
    let g = NeighborGraph::rook(rows, cols).unwrap();
    let theta = DMatrix::from_fn(16, k, |_, _| rng.random_range(-0.4..0.4));
    let a = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
    (p, basis, g, theta, a)
}

fn central_difference(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let h = 1e-5 * x.amax().max(1.0);
    DVector::from_fn(x.len(), |i, _| {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

fn central_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let h = 1e-5 * x.amax().max(1.0);
    let mut out = DMatrix::zeros(x.len(), x.len());
    for i in 0..x.len() {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        out.set_column(i, &((f(&up) - f(&down)) / (2.0 * h)));
    }
    out
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}

fn derivative_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (p, basis, g, theta, a) = random_instance(&mut rng);
        let problem = Problem::new(&p, &basis, &g).unwrap();
        let lambdas = Lambdas::new(rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let total = |th: &DMatrix<f64>, sc: &DMatrix<f64>| {
            objective(&problem, th, sc, lambdas).unwrap().total
        };
        let phi = basis.apply(&theta);
        let k = theta.ncols();

        for i in 0..a.nrows() {
            let score_grad = |alpha: &DVector<f64>| {
                let mut sc = a.clone();
                sc.set_row(i, &alpha.transpose());
                let d = neighbor_deviations(&sc, &g);
                score_derivatives(&problem, &phi, &sc, &d, lambdas, i).0
            };
            let alpha = a.row(i).transpose();
            let d = neighbor_deviations(&a, &g);
            let (grad, hess) = score_derivatives(&problem, &phi, &a, &d, lambdas, i);
            let fd = central_difference(
                |x| {
                    let mut sc = a.clone();
                    sc.set_row(i, &x.transpose());
                    total(&theta, &sc)
                },
                &alpha,
            );
            worst_g = worst_g.max(rel(grad.as_slice(), fd.as_slice()));
            worst_h = worst_h.max(rel(
                hess.as_slice(),
                central_jacobian(score_grad, &alpha).as_slice(),
            ));
        }
        for c in 0..k {
            let col = theta.column(c).into_owned();
            let with = |x: &DVector<f64>| {
                let mut th = theta.clone();
                th.set_column(c, x);
                th
            };
            let (grad, hess) = basis_derivatives(&problem, &theta, &a, lambdas, c);
            let fd = central_difference(|x| total(&with(x), &a), &col);
            worst_g = worst_g.max(rel(grad.as_slice(), fd.as_slice()));
            let jac_fd = central_jacobian(
                |x| basis_derivatives(&problem, &with(x), &a, lambdas, c).0,
                &col,
            );
            worst_h = worst_h.max(rel(hess.as_slice(), jac_fd.as_slice()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_g <= 1e-5 && worst_h <= 1e-4 && secs < 30.0,
        format!("worst gradient rel. error {worst_g:.2e}, Hessian {worst_h:.2e}, {secs:.2} s"),
    )
}

fn monotone_descent(fits: &Fits) -> Outcome {
    let bad: Vec<&str> = fits
        .traces
        .iter()
        .filter(|(_, f)| !trace_is_monotone(&f.trace, 1e-12))
        .map(|(n, _)| n.as_str())
        .collect();
    let sweeps: usize = fits.traces.iter().map(|(_, f)| f.trace.len()).sum();
    let unconverged = fits.traces.iter().filter(|(_, f)| !f.converged).count();
    outcome(
        bad.is_empty() && !fits.traces.is_empty(),
        format!(
            "{} fits, {sweeps} sweeps, {unconverged} stopped at the iteration cap, violations: {bad:?}",
            fits.traces.len()
        ),
    )
}

fn periodogram_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut worst_parseval) = (0.0f64, 0.0f64);
    for side in 2..=8usize {
        for _ in 0..50 {
            let data: Vec<f64> = (0..side * side)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let field = GridField::from_row_major(side, side, &data).unwrap();
            let fast = periodogram_2d(&field).unwrap();
            let n = (side * side) as f64;
            for j1 in 0..side {
                for j2 in 0..side {
                    let (mut re, mut im) = (0.0, 0.0);
                    for r in 0..side {
                        for c in 0..side {
                            let ang = -2.0 * std::f64::consts::PI * ((j1 * r + j2 * c) as f64)
                                / side as f64;
                            re += data[r * side + c] * ang.cos();
                            im += data[r * side + c] * ang.sin();
                        }
                    }
                    let direct = (re * re + im * im) / n;
                    let got = fast[j1 * side + j2];
                    let scale = direct.abs().max(1e-300);
                    if direct > 1e-12 {
                        worst = worst.max((got - direct).abs() / scale);
                    } else {
                        worst = worst.max((got - direct).abs());
                    }
                }
            }
            let energy: f64 = data.iter().map(|v| v * v).sum();
            let total: f64 = fast.iter().sum();
            worst_parseval = worst_parseval.max((total - energy).abs() / energy);
        }
    }
    outcome(
        worst <= 1e-10 && worst_parseval <= 1e-8,
        format!("worst rel. error {worst:.2e}, Parseval {worst_parseval:.2e}"),
    )
}

fn penalty_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let basis = BasisSystem::new(12, 10).unwrap();
    let l = 10;
    let mut worst_sheet = 0.0f64;
    for _ in 0..100 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let sheet = DMatrix::from_fn(l * l, 1, |idx, _| {
            let (x, y) = ((idx / l) as f64, (idx % l) as f64);
            c[0] + c[1] * x + c[2] * y + c[3] * x * y
        });
        worst_sheet = worst_sheet.max(pen1(&sheet, &basis.penalty).abs());
    }
    let g = NeighborGraph::rook(5, 5).unwrap();
    let constant = DMatrix::from_fn(25, 3, |_, k| k as f64 - 0.7);
    let const_pen = pen2(&constant, &g);
    let mut worst_loop = 0.0f64;
    for _ in 0..20 {
        let a = DMatrix::from_fn(25, 3, |_, _| rng.random_range(-2.0..2.0));
        let mut naive = 0.0;
        for r in 0..5i32 {
            for c in 0..5i32 {
                let nb: Vec<usize> = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
                    .into_iter()
                    .filter(|&(x, y)| (0..5).contains(&x) && (0..5).contains(&y))
                    .map(|(x, y)| (x * 5 + y) as usize)
                    .collect();
                let i = (r * 5 + c) as usize;
                for k in 0..3 {
                    let m = nb.iter().map(|&s| a[(s, k)]).sum::<f64>() / nb.len() as f64;
                    naive += (a[(i, k)] - m).powi(2);
                }
            }
        }
        worst_loop = worst_loop.max((pen2(&a, &g) - naive).abs() / naive);
    }
    outcome(
        worst_sheet <= 1e-10 && const_pen.abs() <= 1e-12 && worst_loop <= 1e-12,
        format!(
            "worst sheet penalty {worst_sheet:.2e}, constant scores {const_pen:.2e}, loop rel. error {worst_loop:.2e}"
        ),
    )
}

fn df_limits(fits: &mut Fits) -> Outcome {
    let s = Scenario::p1(6, 8, 3).unwrap();
    let lattice = s.sample().unwrap();
    let periodograms = periodogram_set(&lattice).unwrap();
    let graph = lattice.neighbor_graph();
    let basis = BasisSystem::new(8, 5).unwrap();
    let problem = Problem::new(&periodograms, &basis, &graph).unwrap();
    let k = 2;
    let f = fits.keep(
        "df fit".into(),
        fit(&problem, k, &FitOptions::default()).unwrap(),
    );
    let big_l = basis.big_l() as f64;
    let (free, _) = degrees_of_freedom(&problem, &f.theta, &f.a, Lambdas::new(0.0, f.lambda2));
    let (stiff, _) = degrees_of_freedom(&problem, &f.theta, &f.a, Lambdas::new(1e12, f.lambda2));
    let want = 4.0 * k as f64;
    outcome(
        free == k as f64 * big_l && (stiff - want).abs() <= 1e-3,
        format!(
            "df1(0) = {free} (K·L = {}), df1(1e12) = {stiff:.6} (4K = {want})",
            k as f64 * big_l
        ),
    )
}

fn metric_checks() -> Outcome {
    let a = Partition::new(vec![1, 1, 2, 2, 2]);
    let b = Partition::new(vec![1, 1, 1, 2, 2]);
    let hand_ari = adjusted_rand(&a, &b).unwrap();
    let hand_jac = jaccard(&a, &b).unwrap();
    let mut ok = (hand_ari - 1.0 / 6.0).abs() <= 1e-12 && (hand_jac - 1.0 / 3.0).abs() <= 1e-12;
    ok &= adjusted_rand(&a, &a).unwrap() == 1.0;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    for _ in 0..1000 {
        let m = rng.random_range(2..40);
        let ka = rng.random_range(1..6);
        let kb = rng.random_range(1..6);
        let x: Vec<usize> = (0..m).map(|_| rng.random_range(0..ka)).collect();
        let y: Vec<usize> = (0..m).map(|_| rng.random_range(0..kb)).collect();
        let (px, py) = (Partition::new(x.clone()), Partition::new(y.clone()));
        let shuffled = Partition::new(x.iter().map(|v| 17 * v + 3).collect());
        let counts = pair_counts(&px, &py).unwrap();
        let mut brute = [0u64; 4];
        for i in 0..m {
            for j in i + 1..m {
                let (sa, sb) = (x[i] == x[j], y[i] == y[j]);
                brute[match (sa, sb) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                }] += 1;
            }
        }
        let r = adjusted_rand(&px, &py).unwrap();
        let good = [counts.n11, counts.n10, counts.n01, counts.n00] == brute
            && (r - adjusted_rand(&py, &px).unwrap()).abs() <= 1e-12
            && (r - adjusted_rand(&shuffled, &py).unwrap()).abs() <= 1e-12
            && (jaccard(&px, &py).unwrap() - jaccard(&py, &shuffled).unwrap()).abs() <= 1e-12
            && r <= 1.0 + 1e-12;
        if !good {
            failures += 1;
        }
    }
    ok &= failures == 0;
    outcome(
        ok,
        format!(
            "hand ARI {hand_ari:.12}, Jaccard {hand_jac:.12}, property failures {failures}/1000"
        ),
    )
}

/// `K_ν(x) = ∫₀^∞ exp(−x cosh t) cosh(νt) dt` by the trapezoid rule.
fn bessel_quadrature(nu: f64, x: f64) -> f64 {
    let h = 1e-3;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let term = (-x * t.cosh()).exp() * (nu * t).cosh();
        sum += term;
        if term < 1e-300 || t > 50.0 {
            break;
        }
        t += h;
    }
    sum * h
}

fn matern_checks() -> Outcome {
    let exp_model = MaternParams::new(1.3, 0.5).unwrap();
    let mut worst_exp = 0.0f64;
    for s in 0..=1000 {
        let d = s as f64 * 0.01;
        worst_exp = worst_exp.max((matern_cov(d, &exp_model).unwrap() - (-d / 1.3).exp()).abs());
    }
    let mut worst_bessel = 0.0f64;
    for &nu in &[0.1, 0.4, 0.5, 0.9, 1.2, 1.7, 2.5, 3.0] {
        for &x in &[0.1, 0.5, 1.0, 1.9, 2.1, 4.0, 8.0] {
            let want = bessel_quadrature(nu, x);
            worst_bessel = worst_bessel.max((bessel_k(nu, x) - want).abs() / want);
        }
    }

    let side = 6;
    let params = MaternParams::new(0.9, 1.1).unwrap();
    let c = covariance_matrix(side, &params).unwrap();
    let cinv = c.clone().cholesky().unwrap().inverse();
    let chi = ChiSquared::new((side * side) as f64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 200;
    let mut u: Vec<f64> = (0..draws)
        .map(|_| {
            let z = DVector::from_vec(sample_grf(side, &params, &mut rng).unwrap().to_row_major());
            chi.cdf((z.transpose() * &cinv * &z)[(0, 0)])
        })
        .collect();
    u.sort_by(f64::total_cmp);
    let n = draws as f64;
    let ks = u
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
        .fold(0.0, f64::max);
    let critical = 1.628 / n.sqrt();
    outcome(
        worst_exp <= 1e-12 && worst_bessel <= 1e-8 && ks < critical,
        format!(
            "exponential case {worst_exp:.2e}, Bessel vs quadrature {worst_bessel:.2e}, KS {ks:.4} < {critical:.4}"
        ),
    )
}

fn main() -> ExitCode {
    let mut fits = Fits::default();
    let mut elbow = vec![];
    let mut results: Vec<(usize, &str, Outcome)> = vec![];
    let t = Instant::now();
    results.push((1, "p1 recovery", p1_recovery(&mut fits, &mut elbow)));
    results.push((2, "p2 ordering", p2_ordering(&mut fits)));
    results.push((3, "elbow selection", elbow_selection(&elbow)));
    results.push((4, "spatial homogeneity", spatial_homogeneity(&mut fits)));
    results.push((5, "derivative oracle", derivative_oracle()));
    results.push((7, "periodogram oracle", periodogram_oracle()));
    results.push((8, "penalty algebra", penalty_algebra()));
    results.push((9, "df limits", df_limits(&mut fits)));
    results.push((10, "metrics", metric_checks()));
    results.push((11, "Matérn and sampler", matern_checks()));
    results.push((6, "monotone descent", monotone_descent(&fits)));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:2} {name:<22} {tag}  {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        t.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
