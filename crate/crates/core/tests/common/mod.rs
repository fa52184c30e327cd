#![allow(dead_code)]

use dualtake::learners::{bce_loss, Mlp, MlpHyperParams, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Probability a random positive outscores a random negative, ties counted half.
pub fn concordance(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn loss(net: &Mlp<f64>, x: &[f64], y: bool) -> f64 {
    bce_loss(net.predict(x).unwrap(), y)
}

/// Relative error between an analytic and a numeric derivative.
fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-9 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

pub fn gradient_check(hyper: &MlpHyperParams, probes: usize, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let h = 1e-6;
    while checked < probes {
        let mut net = Mlp::<f64>::init(52, hyper, rng.gen()).unwrap();
        let x: Vec<f64> = (0..52).map(|_| rng.sample(StandardNormal)).collect();
        let y = rng.gen_bool(0.5);
        let act = net.forward(&x, Mode::Eval, &mut rng).unwrap();
        if act.score < 1e-6 || act.score > 1.0 - 1e-6 {
            continue;
        }
        let mut grads = vec![0.0; net.params.len()];
        net.backward(&act, y, 1.0, &mut grads);
        let i = rng.gen_range(0..net.params.len());
        let keep = net.params[i];
        net.params[i] = keep + h;
        let up = loss(&net, &x, y);
        net.params[i] = keep - h;
        let down = loss(&net, &x, y);
        net.params[i] = keep;
        // Kinks of ReLU or a flipped max-pool winner inside ±h make the
        // numeric derivative meaningless; detect them by re-probing at h/10.
        let numeric = (up - down) / (2.0 * h);
        net.params[i] = keep + h / 10.0;
        let up2 = loss(&net, &x, y);
        net.params[i] = keep - h / 10.0;
        let down2 = loss(&net, &x, y);
        net.params[i] = keep;
        let numeric2 = (up2 - down2) / (2.0 * h / 10.0);
        if rel_err(numeric, numeric2) > 1e-3 {
            continue;
        }
        worst = worst.max(rel_err(grads[i], numeric));
        checked += 1;
    }
    (checked, worst)
}
