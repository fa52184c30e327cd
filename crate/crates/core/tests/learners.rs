mod common;

use common::gradient_check;
use dualtake::learners::{Mlp, MlpHyperParams, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn full_network_gradient_matches_central_differences() {
    let (n, worst) = gradient_check(&MlpHyperParams::default(), 300, 11);
    assert_eq!(n, 300);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn small_network_gradient_matches_central_differences() {
    let (n, worst) = gradient_check(&MlpHyperParams::small(), 200, 12);
    assert_eq!(n, 200);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn output_bias_gradient_is_score_minus_label() {
    let net = Mlp::<f64>::init(52, &MlpHyperParams::default(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..52).map(|_| rng.sample(StandardNormal)).collect();
    let act = net.forward(&x, Mode::Eval, &mut rng).unwrap();
    let mut grads = vec![0.0; net.params.len()];
    net.backward(&act, true, 2.0, &mut grads);
    let last = *grads.last().unwrap();
    assert!((last - 2.0 * (act.score - 1.0)).abs() < 1e-15);
}
