//! Independent reference implementations checked against the library, plus
//! hand-computed reference values frozen as constants.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radloc::datasets::{
    fd_bin_spec, generate, preset, stepped, ScenarioGrid, TransportMode, MU_CONCRETE,
};
use radloc::eval::{circular_error, mean_ci95};
use radloc::geometry::{polar_to_cartesian, Obstruction, Point2, SourcePose};
use radloc::models::dtree::{best_split, gini};
use radloc::models::knn::{squared_distance, KnnModel, KnnParams};
use radloc::models::logreg::{objective, LogregModel, LogregParams};
use radloc::models::mlp::{init_params, loss_and_grad, Architecture};
use radloc::reftable::{calibrate, CalibrationMode, CalibrationSpec};
use radloc::transport::{expected_counts, sample_counts, BQ_PER_CURIE};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

// ---------------------------------------------------------------- kNN

/// Linear scan: every training point sorted by (squared distance, index).
fn brute_force(points: &Array2<f64>, q: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let d2: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (i, d2)
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn brute_vote(nn: &[(usize, f64)], labels: &[usize], n_classes: usize) -> usize {
    let mut votes = vec![0usize; n_classes];
    for &(i, _) in nn {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    // nearest neighbour among the tied classes decides
    nn.iter()
        .map(|&(i, _)| labels[i])
        .find(|&c| votes[c] == top)
        .unwrap()
}

#[test]
fn knn_matches_linear_scan_on_200_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dims in [2, 8] {
        let x = random_matrix(&mut rng, 200, dims);
        let labels: Vec<usize> = (0..200).map(|_| rng.random_range(0..4)).collect();
        let model = KnnModel::fit(KnnParams::default(), &x, &labels, 4).unwrap();
        for _ in 0..200 {
            let q: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.2..1.2)).collect();
            let oracle = brute_force(&x, &q, 5);
            let got: Vec<(usize, f64)> = model
                .neighbors(&q)
                .iter()
                .map(|n| (n.index, n.dist2))
                .collect();
            assert_eq!(got, oracle);
            assert_eq!(model.predict(&q), brute_vote(&oracle, &labels, 4));
        }
    }
}

#[test]
fn knn_linear_scan_with_duplicate_points() {
    // Integer grid with many exact duplicates: ordering must fall back to index.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Array2::from_shape_fn((200, 3), |_| rng.random_range(0..3) as f64);
    let labels: Vec<usize> = (0..200).map(|i| i % 3).collect();
    let params = KnnParams {
        leaf_size: 4,
        ..KnnParams::default()
    };
    let model = KnnModel::fit(params, &x, &labels, 3).unwrap();
    for _ in 0..200 {
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(0..3) as f64).collect();
        let got: Vec<usize> = model.neighbors(&q).iter().map(|n| n.index).collect();
        let want: Vec<usize> = brute_force(&x, &q, 5).iter().map(|p| p.0).collect();
        assert_eq!(got, want);
    }
    assert_eq!(squared_distance(&[0.0, 3.0], &[4.0, 0.0]), 25.0);
}

// ---------------------------------------------------------------- decision tree

fn oracle_gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    1.0 - counts
        .iter()
        .map(|&c| (c as f64 / n as f64).powi(2))
        .sum::<f64>()
}

/// Every (feature, midpoint) pair, scored from scratch.
fn exhaustive_splits(x: &Array2<f64>, y: &[usize], k: usize) -> Vec<(usize, f64, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let mut l = vec![0; k];
            let mut r = vec![0; k];
            for i in 0..n {
                if x[[i, f]] <= t {
                    l[y[i]] += 1;
                } else {
                    r[y[i]] += 1;
                }
            }
            let (nl, nr) = (
                l.iter().sum::<usize>() as f64,
                r.iter().sum::<usize>() as f64,
            );
            let cost = (nl * oracle_gini(&l) + nr * oracle_gini(&r)) / n as f64;
            out.push((f, t, cost));
        }
    }
    out
}

#[test]
fn best_split_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for node in 0..20 {
        // few distinct values per feature so that exact cost ties happen
        let levels = if node % 2 == 0 { 6 } else { 50 };
        let x = Array2::from_shape_fn((50, 4), |_| rng.random_range(0..levels) as f64 * 0.25);
        let y: Vec<usize> = (0..50).map(|_| rng.random_range(0..3)).collect();
        let idx: Vec<usize> = (0..50).collect();
        let got = best_split(x.view(), &y, 3, &idx).expect("random node is splittable");
        let all = exhaustive_splits(&x, &y, 3);
        let min = all.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
        // first candidate (lowest feature, then lowest threshold) at the minimum
        let want = all.iter().find(|s| s.2 <= min + 1e-12).unwrap();
        assert_eq!(
            (got.feature, got.threshold),
            (want.0, want.1),
            "node {node}"
        );
        assert!((got.cost - min).abs() < 1e-12);
    }
}

#[test]
fn gini_and_split_reference_values() {
    assert!((gini(&[2, 1, 1]).unwrap() - 0.625).abs() < 1e-15);
    let x = Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 8.0, 9.0]).unwrap();
    let s = best_split(x.view(), &[0, 0, 1, 1], 2, &[0, 1, 2, 3]).unwrap();
    assert_eq!((s.feature, s.threshold, s.cost), (0, 5.0, 0.0));
}

// ---------------------------------------------------------------- MLP gradient

#[test]
fn mlp_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let arch = Architecture::new(8, &[15, 15, 15], 6);
    let theta = init_params(&arch, 4);
    let x = random_matrix(&mut rng, 12, 8);
    let y: Vec<usize> = (0..12).map(|i| i % 6).collect();
    let batch: Vec<usize> = (0..12).collect();
    let l2 = 1e-4;
    let mut grad = vec![0.0; theta.len()];
    loss_and_grad(&arch, &theta, &x, &y, &batch, l2, &mut grad);

    let eps = 1e-5;
    let mut scratch = vec![0.0; theta.len()];
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] = theta[k] + eps;
        let fp = loss_and_grad(&arch, &t, &x, &y, &batch, l2, &mut scratch);
        t[k] = theta[k] - eps;
        let fm = loss_and_grad(&arch, &t, &x, &y, &batch, l2, &mut scratch);
        let fd = (fp - fm) / (2.0 * eps);
        let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-4, "max relative discrepancy {worst:e}");
}

// ---------------------------------------------------------------- logistic regression

/// Plain full-batch gradient descent on the same objective, run to
/// convergence.
fn gradient_descent(x: &Array2<f64>, y: &[usize], k: usize, l2: f64) -> (Vec<f64>, f64) {
    let p = k * x.ncols() + k;
    let mut theta = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut f = objective(&theta, &mut grad, x.view(), y, k, l2);
    let mut step = 1.0;
    for _ in 0..200_000 {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() < 1e-10 {
            break;
        }
        // Armijo backtracking
        loop {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let mut g2 = vec![0.0; p];
            let ft = objective(&trial, &mut g2, x.view(), y, k, l2);
            if ft <= f - 0.5 * step * gnorm2 {
                theta = trial;
                grad = g2;
                f = ft;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
    }
    (theta, f)
}

#[test]
fn logreg_reaches_gradient_descent_optimum_on_toy_set() {
    let x = Array2::from_shape_vec(
        (8, 2),
        vec![
            0.0, 0.1, 0.2, 0.0, 0.1, 0.3, 0.3, 0.2, // class 0 near origin
            3.0, 3.1, 3.2, 2.9, 2.8, 3.0, 3.1, 3.3, // class 1 far away
        ],
    )
    .unwrap();
    let y = [0, 0, 0, 0, 1, 1, 1, 1];
    let model = LogregModel::fit(LogregParams::default(), &x, &y, 2).unwrap();
    let (theta_gd, f_gd) = gradient_descent(&x, &y, 2, 1.0);

    let mut theta = model.weights.iter().copied().collect::<Vec<_>>();
    theta.extend(model.bias.iter());
    let mut g = vec![0.0; theta.len()];
    let f = objective(&theta, &mut g, x.view(), &y, 2, 1.0);
    assert!((f - f_gd).abs() < 1e-8, "L-BFGS {f} vs GD {f_gd}");
    for (a, b) in theta.iter().zip(&theta_gd) {
        assert!((a - b).abs() < 1e-4);
    }
    let train_acc = (0..8)
        .filter(|&i| model.predict(&x.row(i).to_vec()) == y[i])
        .count();
    assert_eq!(train_acc, 8);
    assert!(model.loss_history.len() <= 101);
    assert!(model.loss_history.windows(2).all(|w| w[1] <= w[0]));
}

// ---------------------------------------------------------------- frozen reference values

#[test]
fn polar_conversion_reference() {
    let p = polar_to_cartesian(SourcePose::new(5.0, 37.0));
    assert!(
        (p.x - 3.9932).abs() < 5e-5 && (p.y - 3.0091).abs() < 5e-5,
        "{p:?}"
    );
}

#[test]
fn slab_attenuation_reference() {
    // mu = 9.87 1/m over 0.10 m
    let scene = {
        let mut s = preset("S1-small")
            .unwrap()
            .scene
            .with_pose(SourcePose::new(3.0, 0.0));
        s.obstructions
            .push(Obstruction::new(Point2::new(2.0, 0.0), 0.10, 1.0, 9.87));
        s.array.detectors.iter_mut().for_each(|d| d.mu_self = 0.0);
        s
    };
    let att = radloc::geometry::attenuation_factor(scene.source_position(), 0, &scene).unwrap();
    assert!((att - 0.3727).abs() < 5e-5, "{att}");
}

#[test]
fn concrete_equivalence_reference() {
    let base = preset("L1-small")
        .unwrap()
        .scene
        .with_pose(SourcePose::new(3.0, 0.0));
    let with = |activity: f64, thickness: f64| {
        let mut s = base.clone();
        s.source.activity = activity;
        s.acquisition.background_rate = 0.0;
        s.array.detectors.iter_mut().for_each(|d| d.mu_self = 0.0);
        s.obstructions.push(Obstruction::new(
            Point2::new(2.0, 0.0),
            thickness,
            0.5,
            MU_CONCRETE,
        ));
        expected_counts(&s).unwrap().0[0]
    };
    let a = with(1e-6, 0.10);
    let b = with(1.0, 1.50);
    assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn freedman_diaconis_reference() {
    let spec = fd_bin_spec(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
    assert!((spec.width - 3.5).abs() < 1e-12);
    assert_eq!(spec.n_bins(), 2);
}

#[test]
fn ci_reference() {
    let (m, h) = mean_ci95(&[0.0, 1.0]).unwrap();
    assert_eq!(m, 0.5);
    assert!((h - 0.98).abs() < 1e-3);
    assert_eq!(circular_error(350.0, 10.0), 20.0);
}

#[test]
fn ci_half_width_shrinks_like_root_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
    let (_, small) = mean_ci95(&draws[..2_000]).unwrap();
    let (_, big) = mean_ci95(&draws).unwrap();
    let ratio = small / big;
    assert!((ratio - 10f64.sqrt()).abs() < 0.15, "{ratio}");
}

#[test]
fn poisson_mean_and_variance() {
    let lambda = radloc::transport::CountVector(vec![1e4]);
    let draws: Vec<f64> = (0..1000)
        .map(|s| sample_counts(&lambda, s).unwrap().0[0])
        .collect();
    let mean = draws.iter().sum::<f64>() / 1000.0;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 999.0;
    assert!((mean - 1e4).abs() < 100.0);
    assert!((0.9..=1.1).contains(&(var / mean)), "{}", var / mean);
}

#[test]
fn grid_cardinality() {
    let p = preset("S1-small").unwrap();
    assert_eq!(p.grid.len(), 72 * 29 * 5);
    assert_eq!(generate(&p.grid, &p.scene).unwrap().len(), 10_440);
}

#[test]
fn reftable_rows_rotate_with_the_array() {
    let scene = preset("S1-small").unwrap().scene;
    let spec = CalibrationSpec {
        mode: CalibrationMode::Noiseless,
        replicates: 1,
        ..CalibrationSpec::new(stepped(0.0, 355.0, 5.0))
    };
    let t = calibrate(&scene, &spec).unwrap();
    // 45° turns the 8-detector ring onto itself: detector d takes d-1's role
    for i in 0..t.calib_angles.len() {
        let j = (i + 9) % 72;
        for d in 0..8 {
            let a = t.responses[i][d];
            let b = t.responses[j][(d + 1) % 8];
            assert!(((a - b) / a).abs() < 1e-9, "row {i} det {d}: {a} vs {b}");
        }
    }
}

#[test]
fn reftable_standard_error_shrinks_with_replicates() {
    let scene = preset("S1-small").unwrap().scene;
    // spread of a row across calibration seeds ~ 1/sqrt(replicates)
    let spread = |reps: usize| {
        let rows: Vec<f64> = (0..30)
            .map(|seed| {
                let spec = CalibrationSpec {
                    replicates: reps,
                    seed,
                    ..CalibrationSpec::new(vec![0.0])
                };
                calibrate(&scene, &spec).unwrap().responses[0][0]
            })
            .collect();
        let m = rows.iter().sum::<f64>() / rows.len() as f64;
        (rows.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (rows.len() - 1) as f64).sqrt()
    };
    let ratio = spread(10) / spread(1000);
    assert!((6.0..16.0).contains(&ratio), "{ratio}");
}

#[test]
fn uniform_guessing_is_at_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 20_000;
    let hits = (0..n)
        .filter(|_| rng.random_range(0..72) == rng.random_range(0..72))
        .count();
    let p = 1.0 / 72.0;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!(((hits as f64 / n as f64) - p).abs() < 3.0 * sigma);
}

#[test]
fn fd_bins_for_paper_scale_distances() {
    // the full S1 grid: 360 angles x 200 evenly spaced distances = 72,000 labels
    let grid = preset("S1").unwrap().grid;
    let d: Vec<f64> = grid
        .distances
        .iter()
        .flat_map(|&r| std::iter::repeat_n(r, grid.angles.len()))
        .collect();
    assert_eq!(d.len(), 72_000);
    let spec = fd_bin_spec(&d).unwrap();
    assert_eq!(spec.n_bins(), 42);
    assert!((spec.width - 0.3365).abs() < 0.001, "{}", spec.width);

    let even = radloc::datasets::linspace(1.0, 15.0, 72_000);
    let spec = fd_bin_spec(&even).unwrap();
    assert_eq!(spec.n_bins(), 42);
    // IQR = 7 m exactly up to grid rounding, so width = 14 / cbrt(72000)
    assert!((spec.width - 14.0 / 72_000f64.cbrt()).abs() < 1e-3);
}

#[test]
fn emitted_photon_arithmetic() {
    let grid: ScenarioGrid = preset("S1-small").unwrap().grid;
    assert_eq!(grid.transport_mode, TransportMode::Poisson);
    // 10 µCi of Co-60 for 14 s
    let s = preset("S1-small").unwrap().scene;
    assert!((s.source.emitted_photons(14.0) - 10e-6 * BQ_PER_CURIE * 2.0 * 14.0).abs() < 1e-3);
}
