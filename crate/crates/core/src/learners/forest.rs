//! CART trees with weighted Gini splits and a bagged forest on top.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{normalized_weights, Matrix};
use super::Classifier;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Gini impurity `1 - Σ (nᵢ/n)²` of (possibly weighted) class counts.
pub fn gini<T: Scalar>(counts: &[T]) -> Result<T> {
    if counts.iter().any(|&c| !(c >= T::zero())) {
        return Err(invalid("class counts must be non-negative"));
    }
    let n: T = counts.iter().copied().sum();
    if !(n > T::zero()) {
        return Err(invalid("gini of an empty node"));
    }
    Ok(T::one() - counts.iter().map(|&c| (c / n) * (c / n)).sum::<T>())
}

#[inline]
fn gini2<T: Scalar>(pos: T, total: T) -> T {
    let p = pos / total;
    let two = T::of(2.0);
    two * p * (T::one() - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestHyperParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    #[serde(with = "super::depth")]
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestHyperParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, features_per_split: 7, min_samples_leaf: 1, bootstrap: true }
    }
}

impl ForestHyperParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees < 1 {
            return Err(invalid("n_trees must be at least 1"));
        }
        if self.features_per_split < 1 || self.features_per_split > n_features {
            return Err(invalid(format!(
                "features_per_split must lie in [1, {n_features}], got {}",
                self.features_per_split
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(invalid("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }

    /// Single depth-1 tree over all features, no bagging.
    pub fn stump(n_features: usize) -> Self {
        Self { n_trees: 1, max_depth: Some(1), features_per_split: n_features, min_samples_leaf: 1, bootstrap: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf { value: T },
    Split { feature: usize, threshold: T, left: usize, right: usize },
}

/// A fitted tree; node 0 is the root. Inputs with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Grower<'a, T> {
    x: &'a Matrix<T>,
    y: &'a [bool],
    w: &'a [T],
    hp: &'a ForestHyperParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Grower<'_, T> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let (pos, total) = idx.iter().fold((T::zero(), T::zero()), |(p, t), &i| {
            let wi = self.w[i];
            (if self.y[i] { p + wi } else { p }, t + wi)
        });
        let value = if total > T::zero() { pos / total } else { T::zero() };
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { value });

        let pure = pos <= T::zero() || pos >= total;
        let depth_capped = self.hp.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.hp.min_samples_leaf {
            return me;
        }
        let Some((feature, threshold)) = self.best_split(idx, pos, total) else {
            return me;
        };
        let mut split = 0;
        for k in 0..idx.len() {
            if self.x.get(idx[k], feature) <= threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split { feature, threshold, left, right };
        me
    }

    fn best_split(&mut self, idx: &[usize], pos: T, total: T) -> Option<(usize, T)> {
        let d = self.x.cols();
        let features = sample(&mut self.rng, d, self.hp.features_per_split.min(d));
        let parent = total * gini2(pos, total);
        let min_leaf = self.hp.min_samples_leaf;
        let mut best: Option<(T, usize, T)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for f in features.iter() {
            order.sort_by(|&a, &b| self.x.get(a, f).partial_cmp(&self.x.get(b, f)).unwrap());
            let (mut lp, mut lt) = (T::zero(), T::zero());
            for k in 0..order.len() - 1 {
                let i = order[k];
                lt = lt + self.w[i];
                if self.y[i] {
                    lp = lp + self.w[i];
                }
                let here = self.x.get(i, f);
                let next = self.x.get(order[k + 1], f);
                if !(next > here) || k + 1 < min_leaf || order.len() - k - 1 < min_leaf {
                    continue;
                }
                let rt = total - lt;
                if !(lt > T::zero() && rt > T::zero()) {
                    continue;
                }
                let impurity = lt * gini2(lp, lt) + rt * gini2(pos - lp, rt);
                if best.as_ref().is_none_or(|b| impurity < b.0) {
                    let mut threshold = (here + next) / T::of(2.0);
                    if !(threshold < next) {
                        threshold = here;
                    }
                    best = Some((impurity, f, threshold));
                }
            }
        }
        let eps = T::of(1e-12) * total;
        best.filter(|b| b.0 < parent - eps).map(|b| (b.1, b.2))
    }
}

fn grow_tree<T: Scalar>(x: &Matrix<T>, y: &[bool], w: &[T], hp: &ForestHyperParams, rng: ChaCha8Rng) -> Tree<T> {
    let mut idx: Vec<usize> = (0..x.rows()).filter(|&i| w[i] > T::zero()).collect();
    let mut g = Grower { x, y, w, hp, rng, nodes: Vec::new() };
    g.grow(&mut idx, 0);
    Tree { nodes: g.nodes }
}

/// Seed of tree `t`; tree `t` is identical whatever the forest size.
fn tree_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64).rotate_left(17) ^ 0x5851_F42D_4C95_7F2D
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Forest<T> {
    pub hyper: ForestHyperParams,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<Tree<T>>,
    /// Set when training data held a single class and the forest is a constant.
    pub degenerate: bool,
    /// (positives, negatives) seen in training.
    pub class_balance: (usize, usize),
}

/// Fits `hp.n_trees` trees on weighted bootstrap resamples.
pub fn train_forest<T: Scalar>(
    x: &Matrix<T>,
    y: &[bool],
    weights: Option<&[T]>,
    hp: &ForestHyperParams,
    seed: u64,
) -> Result<Forest<T>> {
    hp.validate(x.cols())?;
    if x.rows() != y.len() {
        return Err(Error::Dimension { expected: x.rows(), got: y.len() });
    }
    if x.rows() < 1 {
        return Err(invalid("forest needs at least one sample"));
    }
    let w = normalized_weights(weights, x.rows())?;
    let positives = y.iter().filter(|&&l| l).count();
    let class_balance = (positives, y.len() - positives);
    let pos_mass: T = w.iter().zip(y).filter(|(_, &l)| l).map(|(&wi, _)| wi).sum();
    let total: T = w.iter().copied().sum();
    if pos_mass <= T::zero() || pos_mass >= total {
        let value = if pos_mass > T::zero() { T::one() } else { T::zero() };
        return Ok(Forest {
            hyper: *hp,
            seed,
            n_features: x.cols(),
            trees: vec![Tree { nodes: vec![Node::Leaf { value }] }],
            degenerate: true,
            class_balance,
        });
    }

    let sampler = if hp.bootstrap {
        Some(WeightedIndex::new(w.iter().map(|v| v.as_f64())).map_err(|e| invalid(e.to_string()))?)
    } else {
        None
    };
    let trees = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
            match &sampler {
                Some(dist) => {
                    let mut counts = vec![T::zero(); x.rows()];
                    for _ in 0..x.rows() {
                        let i = dist.sample(&mut rng);
                        counts[i] = counts[i] + T::one();
                    }
                    grow_tree(x, y, &counts, hp, rng)
                }
                None => grow_tree(x, y, &w, hp, rng),
            }
        })
        .collect();
    Ok(Forest { hyper: *hp, seed, n_features: x.cols(), trees, degenerate: false, class_balance })
}

impl<T: Scalar> Forest<T> {
    /// Mean leaf positive fraction over the first `n` trees.
    pub fn predict_prefix(&self, x: &[T], n: usize) -> Result<T> {
        if x.len() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, got: x.len() });
        }
        let n = n.clamp(1, self.trees.len());
        let s: T = self.trees[..n].iter().map(|t| t.predict(x)).sum();
        Ok(s / T::of_usize(n))
    }

    /// First `n` trees as a forest of their own.
    pub fn truncated(&self, n: usize) -> Self {
        let mut f = self.clone();
        if !self.degenerate {
            f.trees.truncate(n.max(1));
            f.hyper.n_trees = f.trees.len();
        }
        f
    }
}

impl<T: Scalar> Classifier<T> for Forest<T> {
    fn predict_score(&self, x: &[T]) -> Result<T> {
        self.predict_prefix(x, self.trees.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[4.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini(&[5.0, 5.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(gini(&[3.0, 1.0]).unwrap(), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(gini(&[0.3f32, 0.1]).unwrap(), 0.375, epsilon = 1e-6);
        assert!(gini::<f64>(&[0.0, 0.0]).is_err());
    }

    fn line_data(n: usize) -> (Matrix<f64>, Vec<bool>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let v = if i % 2 == 0 { -1.0 - i as f64 * 0.01 } else { 1.0 + i as f64 * 0.01 };
            rows.push(vec![v, (i % 7) as f64]);
            y.push(v > 0.0);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn separable_line_is_fit_exactly() {
        let (x, y) = line_data(60);
        let hp = ForestHyperParams { n_trees: 10, features_per_split: 2, ..Default::default() };
        let f = train_forest(&x, &y, None, &hp, 5).unwrap();
        let correct = x.iter_rows().zip(&y).filter(|(r, &l)| (f.predict_score(r).unwrap() > 0.5) == l).count();
        assert_eq!(correct, 60);
        // the brute-force best stump on feature 0 is also perfect
        let stump = train_forest(&x, &y, None, &ForestHyperParams::stump(2), 0).unwrap();
        match &stump.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!(*threshold > -1.0 && *threshold < 1.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn single_class_is_degenerate_constant() {
        let (x, _) = line_data(10);
        let hp = ForestHyperParams { features_per_split: 2, ..Default::default() };
        let f = train_forest(&x, &[true; 10], None, &hp, 1).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.predict_score(x.row(3)).unwrap(), 1.0);
        let f = train_forest(&x, &[false; 10], None, &hp, 1).unwrap();
        assert_eq!(f.predict_score(x.row(3)).unwrap(), 0.0);
    }

    fn random_data(seed: u64, n: usize, d: usize) -> (Matrix<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y = rows.iter().map(|r| r[0] + 0.5 * r[1] + 0.3 * rng.gen_range(-1.0..1.0) > 0.0).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn determinism_and_weight_scale_invariance() {
        let (x, y) = random_data(3, 200, 5);
        let hp = ForestHyperParams { n_trees: 15, features_per_split: 3, ..Default::default() };
        let w: Vec<f64> = (0..200).map(|i| 0.5 + (i % 5) as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let a = train_forest(&x, &y, Some(&w), &hp, 9).unwrap();
        let b = train_forest(&x, &y, Some(&w), &hp, 9).unwrap();
        let c = train_forest(&x, &y, Some(&w2), &hp, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees, c.trees);
        let (probe, _) = random_data(4, 20, 5);
        for r in probe.iter_rows() {
            assert_eq!(a.predict_score(r).unwrap(), c.predict_score(r).unwrap());
        }
    }

    #[test]
    fn averaging_two_trees() {
        let leaf = |v: f64| Tree { nodes: vec![Node::Leaf { value: v }] };
        let f = Forest {
            hyper: ForestHyperParams::default(),
            seed: 0,
            n_features: 1,
            trees: vec![leaf(1.0), leaf(0.0)],
            degenerate: false,
            class_balance: (1, 1),
        };
        assert_eq!(f.predict_score(&[0.3]).unwrap(), 0.5);
        assert!(f.predict_score(&[0.3, 0.1]).is_err());
    }

    /// Independent traversal written against the node list directly.
    fn oracle_predict(forest: &Forest<f64>, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for tree in &forest.trees {
            let mut stack = vec![0usize];
            while let Some(i) = stack.pop() {
                match tree.nodes[i] {
                    Node::Leaf { value } => total += value,
                    Node::Split { feature, threshold, left, right } => {
                        stack.push(if x[feature] > threshold { right } else { left })
                    }
                }
            }
        }
        total / forest.trees.len() as f64
    }

    #[test]
    fn prediction_matches_traversal_oracle() {
        let (x, y) = random_data(8, 150, 4);
        let hp = ForestHyperParams { n_trees: 7, features_per_split: 2, max_depth: Some(6), ..Default::default() };
        let f = train_forest(&x, &y, None, &hp, 2).unwrap();
        let (probe, _) = random_data(9, 10, 4);
        for r in probe.iter_rows() {
            assert_eq!(f.predict_score(r).unwrap(), oracle_predict(&f, r));
            let s = f.predict_score(r).unwrap();
            assert!((0.0..=1.0).contains(&s));
        }
        assert!(f.trees.iter().all(|t| t.depth() <= 6));
    }

    #[test]
    fn pure_tree_scores_are_binary() {
        let (x, y) = line_data(30);
        let hp = ForestHyperParams { n_trees: 1, bootstrap: false, features_per_split: 2, ..Default::default() };
        let f = train_forest(&x, &y, None, &hp, 0).unwrap();
        for r in x.iter_rows() {
            let s = f.predict_score(r).unwrap();
            assert!(s == 0.0 || s == 1.0);
        }
    }

    #[test]
    fn prefix_trees_do_not_depend_on_forest_size() {
        let (x, y) = random_data(1, 120, 6);
        let small = train_forest(
            &x,
            &y,
            None,
            &ForestHyperParams { n_trees: 5, features_per_split: 3, ..Default::default() },
            4,
        )
        .unwrap();
        let big = train_forest(
            &x,
            &y,
            None,
            &ForestHyperParams { n_trees: 20, features_per_split: 3, ..Default::default() },
            4,
        )
        .unwrap();
        assert_eq!(small.trees[..], big.trees[..5]);
        assert_eq!(big.truncated(5).trees, small.trees);
    }
}
