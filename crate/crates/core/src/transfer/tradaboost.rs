use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::learners::{train_forest, train_mlp, Classifier, Forest, ForestHyperParams, Matrix, Mlp, MlpHyperParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Source,
    Target,
}

/// Learner refit on every boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseLearner {
    Forest(ForestHyperParams),
    Mlp(MlpHyperParams),
    /// Depth-1 tree over all features.
    Stump,
}

impl Default for BaseLearner {
    fn default() -> Self {
        BaseLearner::Mlp(MlpHyperParams::small())
    }
}

impl BaseLearner {
    pub fn fit<T: Scalar>(&self, x: &Matrix<T>, y: &[bool], w: &[T], seed: u64) -> Result<BaseModel<T>> {
        Ok(match self {
            BaseLearner::Forest(hp) => BaseModel::Forest(train_forest(x, y, Some(w), hp, seed)?),
            BaseLearner::Mlp(hp) => BaseModel::Mlp(train_mlp(x, y, Some(w), hp, seed)?),
            BaseLearner::Stump => {
                BaseModel::Forest(train_forest(x, y, Some(w), &ForestHyperParams::stump(x.cols()), seed)?)
            }
        })
    }
}

/// A fitted round learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum BaseModel<T> {
    Forest(Forest<T>),
    Mlp(Mlp<T>),
}

impl<T: Scalar> Classifier<T> for BaseModel<T> {
    fn predict_score(&self, x: &[T]) -> Result<T> {
        match self {
            BaseModel::Forest(f) => f.predict_score(x),
            BaseModel::Mlp(m) => m.predict_score(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrAdaBoostConfig {
    pub n_iterations: usize,
    pub learning_rate: f64,
    pub base: BaseLearner,
    /// Lower clip bound of the target error; the upper bound is `0.5 - epsilon_min`.
    pub epsilon_min: f64,
}

impl Default for TrAdaBoostConfig {
    fn default() -> Self {
        Self { n_iterations: 10, learning_rate: 0.5, base: BaseLearner::default(), epsilon_min: 1e-10 }
    }
}

impl TrAdaBoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations < 1 {
            return Err(invalid("n_iterations must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid("learning_rate must lie in (0, 1]"));
        }
        if !(self.epsilon_min > 0.0 && self.epsilon_min < 0.25) {
            return Err(invalid("epsilon_min must lie in (0, 0.25)"));
        }
        Ok(())
    }
}

/// Fixed source multiplier base `1 / (1 + √(2 ln n_source / N))`.
pub fn beta_source<T: Scalar>(n_source: usize, n_iterations: usize) -> T {
    let n = T::of_usize(n_source.max(1));
    let big_n = T::of_usize(n_iterations.max(1));
    T::one() / (T::one() + (T::of(2.0) * n.ln() / big_n).sqrt())
}

/// `β_t = ε / (1 - ε)` after clipping `ε` into `[ε_min, 0.5 - ε_min]`.
pub fn beta_target<T: Scalar>(epsilon: T, epsilon_min: T) -> T {
    let hi = T::of(0.5) - epsilon_min;
    let e = epsilon.max(epsilon_min).min(hi);
    e / (T::one() - e)
}

/// Reweights instances by their errors and renormalizes to unit sum.
pub fn weight_update<T: Scalar>(
    weights: &[T],
    origins: &[Origin],
    errors: &[T],
    beta: T,
    beta_t: T,
    learning_rate: T,
) -> Result<Vec<T>> {
    if weights.len() != origins.len() || weights.len() != errors.len() {
        return Err(Error::Dimension { expected: weights.len(), got: origins.len().min(errors.len()) });
    }
    if !(beta_t > T::zero()) {
        return Err(invalid(format!("beta_t must be positive, got {beta_t}")));
    }
    if !(beta > T::zero()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let updated: Vec<T> = weights
        .iter()
        .zip(origins)
        .zip(errors)
        .map(|((&w, o), &e)| match o {
            Origin::Source => w * beta.powf(learning_rate * e),
            Origin::Target => w * beta_t.powf(-learning_rate * e),
        })
        .collect();
    normalize(updated)
}

fn normalize<T: Scalar>(w: Vec<T>) -> Result<Vec<T>> {
    let total: T = w.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return Err(invalid("weights cannot be normalized"));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Per-round weight bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 1-based round number.
    pub iteration: usize,
    /// Weight mass on source instances when the round's learner was fit.
    pub source_sum: f64,
    pub target_sum: f64,
    /// Clipped weighted target error.
    pub target_error: f64,
    pub beta_t: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightTrace {
    pub rows: Vec<TraceRow>,
}

impl WeightTrace {
    pub fn target_fraction(&self, iteration: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.iteration == iteration).map(|r| r.target_sum / (r.source_sum + r.target_sum))
    }

    /// `iteration,source_sum,target_sum,target_error,beta_t` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,source_sum,target_sum,target_error,beta_t\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:?},{:?},{:?},{:?}\n",
                r.iteration, r.source_sum, r.target_sum, r.target_error, r.beta_t
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoostedEnsemble<T> {
    pub n_iterations: usize,
    pub learners: Vec<BaseModel<T>>,
    pub betas: Vec<T>,
    pub seed: u64,
    /// (source instances, target instances) seen in training.
    pub sizes: (usize, usize),
}

impl<T: Scalar> BoostedEnsemble<T> {
    /// 1-based index of the first voting round, `⌈N/2⌉`.
    pub fn vote_from(&self) -> usize {
        self.n_iterations.div_ceil(2).max(1)
    }

    /// Weighted hard vote of rounds `⌈N/2⌉..=N`. Returns the label (ties negative)
    /// and the positive share of the vote mass.
    pub fn predict(&self, x: &[T]) -> Result<(bool, T)> {
        let from = self.vote_from();
        let window: Vec<(usize, &BaseModel<T>)> =
            self.learners.iter().enumerate().filter(|(i, _)| i + 1 >= from).collect();
        if window.is_empty() {
            return Err(invalid("empty voting window"));
        }
        let (mut pos, mut total) = (T::zero(), T::zero());
        for (i, h) in window {
            let weight = (T::one() / self.betas[i]).ln();
            if h.predict_score(x)? > T::of(0.5) {
                pos = pos + weight;
            }
            total = total + weight;
        }
        let score = if total > T::zero() { pos / total } else { T::of(0.5) };
        Ok((score > T::of(0.5), score))
    }
}

impl<T: Scalar> Classifier<T> for BoostedEnsemble<T> {
    fn predict_score(&self, x: &[T]) -> Result<T> {
        Ok(self.predict(x)?.1)
    }
}

fn round_seed(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64 + 1).wrapping_mul(0xA076_1D64_78BD_642F)
}

/// Boosts `config.base` over the union of source and target instances.
pub fn tradaboost_fit<T: Scalar>(
    source: (&Matrix<T>, &[bool]),
    target: (&Matrix<T>, &[bool]),
    config: &TrAdaBoostConfig,
    seed: u64,
) -> Result<(BoostedEnsemble<T>, WeightTrace)> {
    config.validate()?;
    let (xs, ys) = source;
    let (xt, yt) = target;
    if xs.rows() == 0 {
        return Err(invalid("source set is empty"));
    }
    if xt.rows() < 2 {
        return Err(invalid("target set needs at least 2 instances"));
    }
    if xs.cols() != xt.cols() {
        return Err(Error::Dimension { expected: xs.cols(), got: xt.cols() });
    }
    if xs.rows() != ys.len() || xt.rows() != yt.len() {
        return Err(invalid("labels do not match instances"));
    }
    let (ns, nt) = (xs.rows(), xt.rows());
    let mut rows: Vec<&[T]> = xs.iter_rows().collect();
    rows.extend(xt.iter_rows());
    let x = Matrix::from_rows(&rows)?;
    let y: Vec<bool> = ys.iter().chain(yt).copied().collect();
    let origins: Vec<Origin> =
        std::iter::repeat_n(Origin::Source, ns).chain(std::iter::repeat_n(Origin::Target, nt)).collect();

    let n_iter = config.n_iterations;
    let beta = beta_source::<T>(ns, n_iter);
    let lambda = T::of(config.learning_rate);
    let eps_min = T::of(config.epsilon_min);
    let mut w = vec![T::one() / T::of_usize(ns + nt); ns + nt];
    let mut learners = Vec::with_capacity(n_iter);
    let mut betas = Vec::with_capacity(n_iter);
    let mut trace = WeightTrace::default();

    for round in 0..n_iter {
        w = normalize(w)?;
        let h = config.base.fit(&x, &y, &w, round_seed(seed, round))?;
        let errors: Vec<T> = (0..x.rows())
            .map(|i| {
                let predicted = h.predict_score(x.row(i))? > T::of(0.5);
                Ok(if predicted == y[i] { T::zero() } else { T::one() })
            })
            .collect::<Result<_>>()?;
        let target_mass: T = w[ns..].iter().copied().sum();
        let target_err: T = w[ns..].iter().zip(&errors[ns..]).map(|(&wi, &e)| wi * e).sum::<T>() / target_mass;
        let hi = T::of(0.5) - eps_min;
        let eps = target_err.max(eps_min).min(hi);
        let beta_t = beta_target(eps, eps_min);

        let source_sum: T = w[..ns].iter().copied().sum();
        trace.rows.push(TraceRow {
            iteration: round + 1,
            source_sum: source_sum.as_f64(),
            target_sum: target_mass.as_f64(),
            target_error: eps.as_f64(),
            beta_t: beta_t.as_f64(),
        });
        w = weight_update(&w, &origins, &errors, beta, beta_t, lambda)?;
        learners.push(h);
        betas.push(beta_t);
    }
    Ok((BoostedEnsemble { n_iterations: n_iter, learners, betas, seed, sizes: (ns, nt) }, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_examples() {
        assert_eq!(beta_source::<f64>(1, 10), 1.0);
        assert_abs_diff_eq!(beta_source::<f64>(100, 10), 0.5103, epsilon = 1e-4);
        for n in [1usize, 2, 10, 1000, 1_000_000] {
            for big_n in [1usize, 3, 10, 50] {
                let b = beta_source::<f64>(n, big_n);
                assert!(b > 0.0 && b <= 1.0);
            }
        }
    }

    #[test]
    fn update_examples() {
        let beta: f64 = beta_source(100, 10);
        let bt: f64 = beta_target(0.3, 1e-10);
        assert_abs_diff_eq!(bt, 0.3 / 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(bt, 0.4286, epsilon = 1e-4);
        let w = vec![0.25; 4];
        let origins = [Origin::Source, Origin::Source, Origin::Target, Origin::Target];
        let errors = [0.0, 1.0, 0.0, 1.0];
        let raw: Vec<f64> = vec![0.25, 0.25 * beta.powf(0.5), 0.25, 0.25 * bt.powf(-0.5)];
        let total: f64 = raw.iter().sum();
        let out = weight_update(&w, &origins, &errors, beta, bt, 0.5).unwrap();
        for (a, b) in out.iter().zip(&raw) {
            assert_abs_diff_eq!(*a, b / total, epsilon = 1e-15);
        }
        // multipliers relative to a correctly classified instance of the same origin
        assert_abs_diff_eq!(out[1] / out[0], 0.7144, epsilon = 1e-4);
        assert_abs_diff_eq!(out[3] / out[2], 1.5275, epsilon = 1e-4);
        assert_abs_diff_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(weight_update(&w, &origins, &errors, beta, 0.0, 0.5).is_err());
    }

    #[test]
    fn clip_bounds() {
        let hi = beta_target(0.7f64, 1e-10);
        assert!(hi < 1.0 && hi > 0.999_999);
        let lo = beta_target(0.0f64, 1e-10);
        assert!(lo > 0.0 && lo < 1e-9);
    }

    fn stub(score: f64, beta: f64) -> (BaseModel<f64>, f64) {
        use crate::learners::{Forest, Node, Tree};
        let f = Forest {
            hyper: ForestHyperParams::stump(1),
            seed: 0,
            n_features: 1,
            trees: vec![Tree { nodes: vec![Node::Leaf { value: score }] }],
            degenerate: true,
            class_balance: (0, 0),
        };
        (BaseModel::Forest(f), beta)
    }

    fn ensemble(parts: Vec<(BaseModel<f64>, f64)>) -> BoostedEnsemble<f64> {
        let n = parts.len();
        let (learners, betas) = parts.into_iter().unzip();
        BoostedEnsemble { n_iterations: n, learners, betas, seed: 0, sizes: (1, 1) }
    }

    #[test]
    fn voting_examples() {
        let e = ensemble(vec![stub(0.9, 0.3)]);
        assert_eq!(e.predict(&[0.0]).unwrap(), (true, 1.0));

        let e = ensemble(vec![stub(0.1, 0.2), stub(0.1, 0.3), stub(0.1, 0.4)]);
        assert_eq!(e.vote_from(), 2);
        assert_eq!(e.predict(&[0.0]).unwrap(), (false, 0.0));

        // rounds 1..2, both vote (⌈2/2⌉ = 1): ln 4 outweighs ln 2
        let e = ensemble(vec![stub(0.9, 0.25), stub(0.1, 0.5)]);
        let (label, score) = e.predict(&[0.0]).unwrap();
        assert!(label);
        assert_abs_diff_eq!(score, 4f64.ln() / (4f64.ln() + 2f64.ln()), epsilon = 1e-12);
        let e = ensemble(vec![stub(0.1, 0.25), stub(0.9, 0.5)]);
        assert!(!e.predict(&[0.0]).unwrap().0);

        // the first rounds are outside the window for N = 4
        let e = ensemble(vec![stub(0.9, 0.01), stub(0.1, 0.3), stub(0.1, 0.3), stub(0.1, 0.3)]);
        assert_eq!(e.predict(&[0.0]).unwrap(), (false, 0.0));

        let empty = BoostedEnsemble::<f64> { n_iterations: 2, learners: vec![], betas: vec![], seed: 0, sizes: (1, 1) };
        assert!(empty.predict(&[0.0]).is_err());
    }

    #[test]
    fn fit_validates_inputs() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let one = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let cfg = TrAdaBoostConfig { base: BaseLearner::Stump, ..Default::default() };
        assert!(tradaboost_fit((&x, &[false, true]), (&one, &[true]), &cfg, 0).is_err());
        let bad = TrAdaBoostConfig { learning_rate: 0.0, ..cfg.clone() };
        assert!(tradaboost_fit((&x, &[false, true]), (&x, &[false, true]), &bad, 0).is_err());
    }
}
