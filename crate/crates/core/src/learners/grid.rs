//! Participant-grouped grid search over forest size and depth.

use serde::{Deserialize, Serialize};

use super::forest::{train_forest, ForestHyperParams};
use super::matrix::Matrix;
use crate::error::{invalid, Result};
use crate::eval::folds::group_kfold;
use crate::eval::metrics::auc;
use crate::scalar::Scalar;

/// Candidate values; every other forest setting is shared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    #[serde(with = "super::depth::list")]
    pub max_depth: Vec<Option<usize>>,
    pub features_per_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 200],
            max_depth: vec![Some(4), Some(8), Some(16), None],
            features_per_split: 7,
            min_samples_leaf: 1,
            bootstrap: true,
        }
    }
}

impl ForestGrid {
    /// Grid points ordered from the smallest model (fewer trees, then shallower).
    pub fn points(&self) -> Vec<ForestHyperParams> {
        let mut trees = self.n_trees.clone();
        trees.sort_unstable();
        trees.dedup();
        let mut depths = self.max_depth.clone();
        depths.sort_by_key(|d| d.unwrap_or(usize::MAX));
        depths.dedup();
        let mut out = Vec::new();
        for &n_trees in &trees {
            for &max_depth in &depths {
                out.push(ForestHyperParams {
                    n_trees,
                    max_depth,
                    features_per_split: self.features_per_split,
                    min_samples_leaf: self.min_samples_leaf,
                    bootstrap: self.bootstrap,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ForestHyperParams,
    /// Mean validation AUC per grid point (empty when the grid had one point).
    pub scores: Vec<(ForestHyperParams, f64)>,
}

/// Picks the grid point with the best mean AUC under participant-grouped k-fold.
/// Ties go to the smaller model.
pub fn grid_search_forest<T: Scalar>(
    x: &Matrix<T>,
    y: &[bool],
    groups: &[u32],
    weights: Option<&[T]>,
    grid: &ForestGrid,
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    let points = grid.points();
    if points.is_empty() {
        return Err(invalid("empty forest grid"));
    }
    if groups.len() != x.rows() || y.len() != x.rows() {
        return Err(invalid("features, labels and groups must have equal length"));
    }
    let folds = group_kfold(groups, k, seed)?;
    if points.len() == 1 {
        return Ok(GridSearchResult { best: points[0], scores: Vec::new() });
    }

    let max_trees = points.iter().map(|p| p.n_trees).max().unwrap();
    let mut depths: Vec<Option<usize>> = points.iter().map(|p| p.max_depth).collect();
    depths.dedup();
    depths.sort_by_key(|d| d.unwrap_or(usize::MAX));
    depths.dedup();

    // sums[(n_trees, depth)] accumulates validation AUC over usable folds.
    let mut sums = vec![0.0f64; points.len()];
    let mut used = vec![0usize; points.len()];
    for fold in 0..k {
        let (train, valid): (Vec<usize>, Vec<usize>) =
            (0..x.rows()).partition(|&i| folds.fold(groups[i]) != Some(fold));
        let yv: Vec<bool> = valid.iter().map(|&i| y[i]).collect();
        let yt: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let both = |v: &[bool]| v.iter().any(|&l| l) && v.iter().any(|&l| !l);
        if !both(&yv) || !both(&yt) {
            continue;
        }
        let xt = x.select(&train);
        let wt: Option<Vec<T>> = weights.map(|w| train.iter().map(|&i| w[i]).collect());
        for &depth in &depths {
            let hp = ForestHyperParams { n_trees: max_trees, max_depth: depth, ..points[0] };
            let forest = train_forest(&xt, &yt, wt.as_deref(), &hp, seed ^ (fold as u64).wrapping_mul(0x2545_F491))?;
            for (pi, p) in points.iter().enumerate().filter(|(_, p)| p.max_depth == depth) {
                let scores: Vec<T> =
                    valid.iter().map(|&i| forest.predict_prefix(x.row(i), p.n_trees)).collect::<Result<_>>()?;
                sums[pi] += auc(&scores, &yv)?;
                used[pi] += 1;
            }
        }
    }
    let scores: Vec<(ForestHyperParams, f64)> = points
        .iter()
        .zip(sums.iter().zip(&used))
        .map(|(p, (&s, &n))| (*p, if n > 0 { s / n as f64 } else { 0.5 }))
        .collect();
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if *s > scores[best].1 {
            best = i;
        }
    }
    Ok(GridSearchResult { best: scores[best].0, scores })
}
