use dualtake::learners::{Classifier, ForestHyperParams, Matrix};
use dualtake::transfer::{
    beta_source, beta_target, tradaboost_fit, weight_update, BaseLearner, Origin, TrAdaBoostConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Two Gaussian blobs in 6 dimensions, separated along the first two axes.
fn blobs(n: usize, shift: f64, seed: u64) -> (Matrix<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2 == 0;
        let c = if y { 1.0 } else { -1.0 };
        let row: Vec<f64> = (0..6)
            .map(|d| {
                let noise: f64 = rng.sample(StandardNormal);
                let centre = if d < 2 { c } else { 0.0 };
                centre + shift + 1.2 * noise
            })
            .collect();
        rows.push(row);
        labels.push(y);
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

fn error_rate(pred: impl Fn(&[f64]) -> bool, x: &Matrix<f64>, y: &[bool]) -> f64 {
    let wrong = (0..x.rows()).filter(|&i| pred(x.row(i)) != y[i]).count();
    wrong as f64 / x.rows() as f64
}

#[test]
fn trace_is_complete_and_conserves_weight() {
    let (xs, ys) = blobs(300, 0.0, 1);
    let (xt, yt) = blobs(60, 0.8, 2);
    for base in [BaseLearner::Stump, BaseLearner::default()] {
        let cfg = TrAdaBoostConfig { base, ..TrAdaBoostConfig::default() };
        let (ens, trace) = tradaboost_fit((&xs, &ys[..]), (&xt, &yt[..]), &cfg, 5).unwrap();
        assert_eq!(trace.rows.len(), cfg.n_iterations);
        assert_eq!(ens.learners.len(), cfg.n_iterations);
        for (k, row) in trace.rows.iter().enumerate() {
            assert_eq!(row.iteration, k + 1);
            assert!((row.source_sum + row.target_sum - 1.0).abs() < 1e-12);
            assert!(row.target_error > 0.0 && row.target_error < 0.5);
        }
        assert!((trace.rows[0].target_sum - 60.0 / 360.0).abs() < 1e-12);
    }
}

#[test]
fn fit_is_deterministic() {
    let (xs, ys) = blobs(200, 0.0, 3);
    let (xt, yt) = blobs(40, 0.5, 4);
    let cfg = TrAdaBoostConfig::default();
    let a = tradaboost_fit((&xs, &ys[..]), (&xt, &yt[..]), &cfg, 9).unwrap();
    let b = tradaboost_fit((&xs, &ys[..]), (&xt, &yt[..]), &cfg, 9).unwrap();
    assert_eq!(a.1, b.1);
    for i in 0..xt.rows() {
        assert_eq!(a.0.predict(xt.row(i)).unwrap(), b.0.predict(xt.row(i)).unwrap());
    }
}

#[test]
fn same_distribution_costs_little_over_the_base_learner() {
    let forest = ForestHyperParams { n_trees: 30, max_depth: Some(6), features_per_split: 3, ..Default::default() };
    let mut gaps = Vec::new();
    for seed in 0..5u64 {
        let (xs, ys) = blobs(400, 0.0, 100 + seed);
        let (xt, yt) = blobs(80, 0.0, 200 + seed);
        let (xe, ye) = blobs(600, 0.0, 300 + seed);
        let cfg = TrAdaBoostConfig { base: BaseLearner::Forest(forest), ..TrAdaBoostConfig::default() };
        let (ens, _) = tradaboost_fit((&xs, &ys[..]), (&xt, &yt[..]), &cfg, seed).unwrap();

        let mut rows: Vec<&[f64]> = xs.iter_rows().collect();
        rows.extend(xt.iter_rows());
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<bool> = ys.iter().chain(&yt).copied().collect();
        let w = vec![1.0 / x.rows() as f64; x.rows()];
        let base = cfg.base.fit(&x, &y, &w, seed).unwrap();

        let ens_err = error_rate(|r| ens.predict(r).unwrap().0, &xe, &ye);
        let base_err = error_rate(|r| base.predict_score(r).unwrap() > 0.5, &xe, &ye);
        gaps.push(ens_err - base_err);
    }
    gaps.sort_by(f64::total_cmp);
    assert!(gaps[2] <= 0.02, "median gap {}", gaps[2]);
}

#[test]
fn multipliers_at_the_default_rates() {
    let beta: f64 = beta_source(100, 10);
    assert!((beta - 0.5103).abs() < 1e-4);
    assert!((beta.powf(0.5) - 0.7144).abs() < 1e-4);
    let bt: f64 = beta_target(0.3, 1e-10);
    assert!((bt.powf(-0.5) - 1.5275).abs() < 1e-4);
}

proptest! {
    #[test]
    fn update_conserves_mass_and_pushes_the_right_way(
        raw in prop::collection::vec((0.01f64..1.0, any::<bool>(), any::<bool>()), 4..60),
        n_source in 10usize..5000,
        eps in 0.01f64..0.49,
        lambda in 0.05f64..1.0,
    ) {
        let mut weights: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let mut origins: Vec<Origin> = raw.iter().map(|r| if r.1 { Origin::Source } else { Origin::Target }).collect();
        let mut errors: Vec<f64> = raw.iter().map(|r| if r.2 { 1.0 } else { 0.0 }).collect();
        // One correct and one wrong instance of each origin as references.
        for (o, e) in [(Origin::Source, 0.0), (Origin::Source, 1.0), (Origin::Target, 0.0), (Origin::Target, 1.0)] {
            weights.push(0.5);
            origins.push(o);
            errors.push(e);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let beta = beta_source::<f64>(n_source, 10);
        let beta_t = beta_target(eps, 1e-10);
        let out = weight_update(&weights, &origins, &errors, beta, beta_t, lambda).unwrap();
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let n = out.len();
        let ratio = |i: usize| out[i] / weights[i];
        let (s_ok, s_bad, t_ok, t_bad) = (ratio(n - 4), ratio(n - 3), ratio(n - 2), ratio(n - 1));
        prop_assert!(s_bad <= s_ok * (1.0 + 1e-12));
        prop_assert!(t_bad >= t_ok * (1.0 - 1e-12));
    }

    #[test]
    fn repeated_misclassification_never_gains_source_weight(rounds in 1usize..10, n_source in 10usize..5000) {
        let beta = beta_source::<f64>(n_source, 10);
        let beta_t = beta_target(0.3, 1e-10);
        let origins = [Origin::Source, Origin::Source, Origin::Target, Origin::Target];
        let errors = [1.0, 0.0, 1.0, 0.0];
        let mut w = vec![0.25; 4];
        for _ in 0..rounds {
            w = weight_update(&w, &origins, &errors, beta, beta_t, 0.5).unwrap();
        }
        prop_assert!(w[0] <= w[1]);
        prop_assert!(w[2] >= w[3]);
        prop_assert!(w[0] <= 0.25 + 1e-15);
    }
}
