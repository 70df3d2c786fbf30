use ndarray::Array2;
use proptest::prelude::*;

use radloc::datasets::{preset, Dataset, Target};
use radloc::eval::{circular_error, evaluate, EvalOptions, Predictor};
use radloc::geometry::{
    segment_circle_chord_length, segment_rect_length, Obstruction, Point2, SourcePose,
};
use radloc::models::dtree::{DecisionTree, DtreeParams, TreeNode};
use radloc::models::{fit, LabeledMatrix, ModelConfig, ModelKind, TrainedModel};
use radloc::scaling::{fit_robust, transform_robust, unit_norm, NormSpec};
use radloc::stats::quantile;
use radloc::transport::expected_counts;

fn small_dataset() -> Dataset {
    let mut p = preset("L1-small").unwrap();
    p.grid.replicates = 2;
    radloc::datasets::generate(&p.grid, &p.scene).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_norm_is_scale_invariant(
        x in prop::collection::vec(0.0f64..1e4, 2..10),
        c in 1e-3f64..1e3,
    ) {
        prop_assume!(x.iter().any(|&v| v > 0.0));
        let a = unit_norm(&x, NormSpec::default()).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let b = unit_norm(&scaled, NormSpec::default()).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
        let n: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circular_error_is_a_bounded_symmetric_distance(a in -720.0f64..720.0, b in -720.0f64..720.0) {
        let e = circular_error(a, b);
        prop_assert!((0.0..=180.0).contains(&e));
        prop_assert!((e - circular_error(b, a)).abs() < 1e-9);
        prop_assert!(circular_error(a, a + 360.0) < 1e-9);
    }

    #[test]
    fn robust_fit_centers_training_medians(
        rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 4..40),
    ) {
        let m = Array2::from_shape_vec((rows.len(), 3), rows.concat()).unwrap();
        let p = fit_robust(&m).unwrap();
        let t: Vec<Vec<f64>> = rows.iter().map(|r| transform_robust(&p, r).unwrap()).collect();
        for f in 0..3 {
            let col: Vec<f64> = t.iter().map(|r| r[f]).collect();
            prop_assert!(quantile(&col, 0.5).abs() <= 1e-12);
            prop_assert!(p.scales[f] > 0.0);
        }
    }

    #[test]
    fn chord_never_exceeds_diameter(
        ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0,
        r in 0.01f64..2.0,
    ) {
        let a = Point2::new(ax, ay);
        let b = Point2::new(bx, by);
        let l = segment_circle_chord_length(a, b, Point2::ORIGIN, r);
        prop_assert!(l >= 0.0 && l <= 2.0 * r + 1e-12 && l <= a.distance(&b) + 1e-12);
    }

    #[test]
    fn rect_path_is_bounded_by_segment_and_diagonal(
        ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0,
        w in 0.1f64..3.0, h in 0.1f64..3.0,
    ) {
        let rect = Obstruction::new(Point2::new(0.5, -0.2), w, h, 1.0);
        let a = Point2::new(ax, ay);
        let b = Point2::new(bx, by);
        let l = segment_rect_length(a, b, &rect);
        prop_assert!(l >= 0.0);
        prop_assert!(l <= a.distance(&b) + 1e-12);
        prop_assert!(l <= w.hypot(h) + 1e-12);
        prop_assert!((l - segment_rect_length(b, a, &rect)).abs() < 1e-12);
    }

    #[test]
    fn expected_counts_follow_activity_time_and_inverse_square(
        r in 1.0f64..20.0, theta in 0.0f64..360.0, k in 0.05f64..20.0,
    ) {
        let mut scene = preset("S1-small").unwrap().scene.with_pose(SourcePose::new(r, theta));
        scene.acquisition.background_rate = 0.0;
        let base = expected_counts(&scene).unwrap();
        let mut traded = scene.clone();
        traded.source.activity *= k;
        traded.acquisition.live_time /= k;
        let t = expected_counts(&traded).unwrap();
        for (a, b) in base.iter().zip(t.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
            prop_assert!(*a >= 0.0);
        }
        // without occlusion the signal times squared range is constant
        let mut bare = scene.clone();
        bare.array.detectors.iter_mut().for_each(|d| d.mu_self = 0.0);
        let far_scene = bare.with_pose(SourcePose::new(2.0 * r, theta));
        let near = expected_counts(&bare).unwrap();
        let far = expected_counts(&far_scene).unwrap();
        for (d, det) in bare.array.detectors.iter().enumerate() {
            let rn = bare.source_position().distance(&det.center);
            let rf = far_scene.source_position().distance(&det.center);
            prop_assert!((far[d] * rf * rf / (near[d] * rn * rn) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn metrics_are_permutation_invariant(seed in any::<u64>()) {
        let ds = small_dataset();
        let model = radloc::models::train(
            &ModelConfig::new(ModelKind::Knn),
            radloc::scaling::ScalerKind::UnitNorm,
            &ds,
            Target::Angle,
        ).unwrap();
        let a = evaluate(Predictor::Model(&model), &ds, &EvalOptions::default()).unwrap();
        let mut samples = ds.samples.clone();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        samples.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let b = evaluate(Predictor::Model(&model), &ds.with_samples(samples), &EvalOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn decision_tree_depth_and_impurity_decrease(
        rows in prop::collection::vec((0u8..6, 0u8..6, 0usize..3), 6..80),
    ) {
        let x = Array2::from_shape_fn((rows.len(), 2), |(i, j)| if j == 0 { rows[i].0 as f64 } else { rows[i].1 as f64 });
        let y: Vec<usize> = rows.iter().map(|r| r.2).collect();
        let tree = DecisionTree::fit(DtreeParams { max_depth: 3 }, &x, &y, 3).unwrap();
        prop_assert!(tree.depth() <= 3);
        for node in &tree.nodes {
            if let TreeNode::Split { impurity, split_cost, .. } = node {
                prop_assert!(split_cost < impurity);
            }
        }
    }

    #[test]
    fn model_containers_round_trip(
        kind_index in 0usize..5,
        queries in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 2), 1..20),
    ) {
        let kind = ModelKind::ALL[kind_index];
        let x = Array2::from_shape_vec((8, 2), vec![
            0.0, 0.1, 0.2, 0.0, 0.1, 0.3, 0.3, 0.2,
            3.0, 3.1, 3.2, 2.9, 2.8, 3.0, 3.1, 3.3,
        ]).unwrap();
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let mut cfg = ModelConfig::new(kind);
        cfg.mlp.epochs = 20;
        let m = fit(&cfg, &LabeledMatrix::new(x, y, 2).unwrap()).unwrap();
        let json = m.to_container(None).to_json().unwrap();
        let back = TrainedModel::from_container(&radloc::models::container::Container::from_json(&json).unwrap()).unwrap();
        for q in &queries {
            prop_assert_eq!(m.predict(q).unwrap(), back.predict(q).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dataset_csv_round_trips(replicates in 1usize..3, seed in 0u64..1000) {
        let mut p = preset("L2-small").unwrap();
        p.grid.replicates = replicates;
        p.grid.seed = seed;
        let ds = radloc::datasets::generate(&p.grid, &p.scene).unwrap();
        let mut buf = Vec::new();
        radloc::datasets::write_csv_to(&ds, &mut buf, &[]).unwrap();
        let back = radloc::datasets::read_csv_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.samples, ds.samples);
        prop_assert_eq!(back.bin_spec, ds.bin_spec);
    }

    #[test]
    fn split_partitions_and_is_seeded(seed in any::<u64>(), frac in 0.1f64..0.5) {
        let ds = small_dataset();
        let (a, b) = radloc::datasets::split(&ds, frac, seed).unwrap();
        prop_assert_eq!(a.len() + b.len(), ds.len());
        let (a2, b2) = radloc::datasets::split(&ds, frac, seed).unwrap();
        prop_assert_eq!(a.samples, a2.samples);
        prop_assert_eq!(b.samples, b2.samples);
    }

    #[test]
    fn training_is_deterministic(kind_index in 0usize..5, seed in 0u64..100) {
        let ds = small_dataset();
        let mut cfg = ModelConfig::new(ModelKind::ALL[kind_index]);
        cfg.seed = seed;
        cfg.mlp.epochs = 10;
        let a = radloc::models::train(&cfg, radloc::scaling::ScalerKind::Robust, &ds, Target::Angle).unwrap();
        let b = radloc::models::train(&cfg, radloc::scaling::ScalerKind::Robust, &ds, Target::Angle).unwrap();
        prop_assert_eq!(a.to_container(None).to_json().unwrap(), b.to_container(None).to_json().unwrap());
    }
}

fn blobs(per_class: usize, k: usize) -> LabeledMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for c in 0..k {
        let (cx, cy) = ((c as f64 * 2.1).cos() * 3.0, (c as f64 * 2.1).sin() * 3.0);
        for _ in 0..per_class {
            rows.extend([
                cx + rng.random_range(-0.5..0.5),
                cy + rng.random_range(-0.5..0.5),
            ]);
            y.push(c);
        }
    }
    LabeledMatrix::new(Array2::from_shape_vec((y.len(), 2), rows).unwrap(), y, k).unwrap()
}

#[test]
fn gradient_trained_losses_settle_at_the_end() {
    // Final 10% of the recorded training losses never increase.
    let data = blobs(40, 3);
    for kind in [ModelKind::Logreg, ModelKind::Mlp] {
        let m = fit(&ModelConfig::new(kind), &data).unwrap();
        let h = m.fitted.loss_history().unwrap();
        let tail = &h[h.len() - h.len().div_ceil(10)..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0]), "{kind}: {tail:?}");
    }
}

#[test]
fn logreg_loss_never_increases() {
    let mut p = preset("L1-small").unwrap();
    p.grid.replicates = 3;
    let ds = radloc::datasets::generate(&p.grid, &p.scene).unwrap();
    let m = radloc::models::train(
        &ModelConfig::new(ModelKind::Logreg),
        radloc::scaling::ScalerKind::Robust,
        &ds,
        Target::Angle,
    )
    .unwrap();
    let h = m.fitted.loss_history().unwrap();
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
}
