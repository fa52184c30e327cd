//! Cross-domain comparison: car windows as source, micro-mobility windows as
//! target, participant-grouped folds over the target.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{group_kfold, FoldAssignment};
use super::metrics::{auc, confusion, roc_curve, Confusion, RocPoint};
use super::ttest::{paired_ttest, TTest};
use crate::dataset::Dataset;
use crate::domain::DomainTag;
use crate::error::{invalid, Error, Result};
use crate::layout::FeatureLayout;
use crate::learners::{
    grid_search_forest, train_forest, train_mlp, Classifier, Forest, ForestGrid, GridSearchResult, Matrix, Mlp,
    MlpHyperParams,
};
use crate::pipeline::balance_downsample;
use crate::synth::derive_seed;
use crate::transfer::{tradaboost_fit, BoostedEnsemble, TrAdaBoostConfig, WeightTrace};

pub const MODEL_NAMES: [&str; 3] = ["forest", "mlp", "tradaboost"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    pub forest_grid: ForestGrid,
    /// Participant-grouped folds of the forest grid search.
    pub grid_folds: usize,
    pub mlp: MlpHyperParams,
    pub tradaboost: TrAdaBoostConfig,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            forest_grid: ForestGrid::default(),
            grid_folds: 3,
            mlp: MlpHyperParams::default(),
            tradaboost: TrAdaBoostConfig::default(),
        }
    }
}

impl ModelsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_folds < 2 {
            return Err(invalid("grid_folds must be at least 2"));
        }
        if self.forest_grid.points().is_empty() {
            return Err(invalid("forest grid is empty"));
        }
        self.mlp.validate()?;
        self.tradaboost.validate()
    }
}

fn xy(ds: &Dataset) -> (Matrix<f64>, Vec<bool>) {
    (Matrix::from_dataset(ds), ds.labels())
}

/// Source-only models: the grid-searched forest and the MLP, both trained on
/// `source` as given (callers balance it first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModels {
    pub grid: GridSearchResult,
    pub forest: Forest<f64>,
    pub mlp: Mlp<f64>,
}

pub fn train_source_models(source: &Dataset, models: &ModelsConfig, seed: u64) -> Result<SourceModels> {
    let (x, y) = xy(source);
    let groups: Vec<u32> = source.windows.iter().map(|w| w.participant_id).collect();
    let grid =
        grid_search_forest(&x, &y, &groups, None, &models.forest_grid, models.grid_folds, derive_seed(&[seed, 11]))?;
    let forest = train_forest(&x, &y, None, &grid.best, derive_seed(&[seed, 12]))?;
    let mlp = train_mlp(&x, &y, None, &models.mlp, derive_seed(&[seed, 13]))?;
    Ok(SourceModels { grid, forest, mlp })
}

/// TrAdaBoost on a (balanced) source set and the class-balanced `target`.
pub fn train_transfer(
    source: &Dataset,
    target: &Dataset,
    config: &TrAdaBoostConfig,
    seed: u64,
) -> Result<(BoostedEnsemble<f64>, WeightTrace)> {
    let target = balance_downsample(target, derive_seed(&[seed, 21]))?;
    let (xs, ys) = xy(source);
    let (xt, yt) = xy(&target);
    tradaboost_fit((&xs, &ys), (&xt, &yt), config, derive_seed(&[seed, 22]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub model: String,
    pub accuracy: f64,
    pub auc: f64,
    pub confusion: Confusion,
    pub roc: Vec<RocPoint>,
}

impl FoldMetrics {
    fn compute(model: &str, scores: &[f64], labels: &[bool]) -> Result<Self> {
        let confusion = confusion(scores, labels, 0.5)?;
        Ok(Self {
            model: model.to_string(),
            accuracy: confusion.accuracy(),
            auc: auc(scores, labels)?,
            confusion,
            roc: roc_curve(scores, labels)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_participants: Vec<u32>,
    pub n_train_target: usize,
    pub n_test: usize,
    pub models: Vec<FoldMetrics>,
    pub trace: WeightTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub folds: FoldAssignment,
    pub forest_grid: GridSearchResult,
    pub n_source_balanced: usize,
    pub results: Vec<FoldResult>,
}

impl SeedRun {
    /// Unweighted mean over folds of one model's (accuracy, AUC).
    pub fn mean_metrics(&self, model: &str) -> (f64, f64) {
        let rows: Vec<&FoldMetrics> =
            self.results.iter().flat_map(|r| r.models.iter().filter(|m| m.model == model)).collect();
        let n = rows.len().max(1) as f64;
        (rows.iter().map(|m| m.accuracy).sum::<f64>() / n, rows.iter().map(|m| m.auc).sum::<f64>() / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    /// Mean over seeds of the per-seed fold means.
    pub accuracy: f64,
    pub auc: f64,
    pub median_auc: f64,
    pub seed_accuracy: Vec<f64>,
    pub seed_auc: Vec<f64>,
}

/// Micro-mobility versus car paired over participants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTTest {
    pub feature: String,
    pub n: usize,
    pub car_mean: f64,
    pub micro_mean: f64,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_digest: Option<String>,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub n_source: usize,
    pub n_target: usize,
    pub models: Vec<ModelSummary>,
    pub runs: Vec<SeedRun>,
    pub ttests: Vec<FeatureTTest>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => s[n / 2],
        _ => (s[n / 2 - 1] + s[n / 2]) / 2.0,
    }
}

/// Per-participant feature means compared across domains, one row per feature.
pub fn domain_ttests(car: &Dataset, micro: &Dataset) -> Result<Vec<FeatureTTest>> {
    let means = |ds: &Dataset| -> BTreeMap<u32, (Vec<f64>, usize)> {
        let mut m: BTreeMap<u32, (Vec<f64>, usize)> = BTreeMap::new();
        for w in &ds.windows {
            let e = m.entry(w.participant_id).or_insert_with(|| (vec![0.0; w.features.len()], 0));
            e.0.iter_mut().zip(&w.features).for_each(|(a, b)| *a += b);
            e.1 += 1;
        }
        m
    };
    let (c, mi) = (means(car), means(micro));
    let shared: Vec<u32> = c.keys().filter(|p| mi.contains_key(p)).copied().collect();
    if shared.len() < 2 {
        return Err(invalid("paired tests need at least 2 participants with both domains"));
    }
    let layout = FeatureLayout::get();
    layout
        .slots()
        .iter()
        .map(|slot| {
            let pick = |m: &BTreeMap<u32, (Vec<f64>, usize)>| -> Vec<f64> {
                shared.iter().map(|p| m[p].0[slot.index] / m[p].1 as f64).collect()
            };
            let (a, b) = (pick(&mi), pick(&c));
            let n = shared.len() as f64;
            Ok(FeatureTTest {
                feature: slot.name.to_string(),
                n: shared.len(),
                car_mean: b.iter().sum::<f64>() / n,
                micro_mean: a.iter().sum::<f64>() / n,
                test: paired_ttest(&a, &b)?,
            })
        })
        .collect()
}

fn run_fold(
    fold: usize,
    folds: &FoldAssignment,
    source: &Dataset,
    sources: &SourceModels,
    target: &Dataset,
    models: &ModelsConfig,
    seed: u64,
) -> Result<FoldResult> {
    let test_participants = folds.members(fold);
    let held_out: BTreeSet<u32> = test_participants.iter().copied().collect();
    let test = target.filter(|w| held_out.contains(&w.participant_id));
    let train = target.filter(|w| !held_out.contains(&w.participant_id));
    let leaked = train
        .windows
        .iter()
        .chain(&source.windows)
        .any(|w| w.domain == DomainTag::MicroMobility && held_out.contains(&w.participant_id));
    if leaked {
        return Err(invalid("test participant windows found in a training set"));
    }

    let (ensemble, trace) =
        train_transfer(source, &train, &models.tradaboost, derive_seed(&[seed, 100 + fold as u64]))?;
    let (xt, yt) = xy(&test);
    let scored: [(&str, Vec<f64>); 3] = [
        (MODEL_NAMES[0], sources.forest.predict_all(&xt)?),
        (MODEL_NAMES[1], sources.mlp.predict_all(&xt)?),
        (MODEL_NAMES[2], ensemble.predict_all(&xt)?),
    ];
    let metrics = scored.iter().map(|(name, scores)| FoldMetrics::compute(name, scores, &yt)).collect::<Result<_>>()?;
    Ok(FoldResult { fold, test_participants, n_train_target: train.len(), n_test: test.len(), models: metrics, trace })
}

/// Models fitted on all available data: the balanced car windows and every
/// micro-mobility window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModels {
    pub sources: SourceModels,
    pub ensemble: BoostedEnsemble<f64>,
    pub trace: WeightTrace,
}

pub fn train_all(car: &Dataset, micro: &Dataset, models: &ModelsConfig, seed: u64) -> Result<TrainedModels> {
    models.validate()?;
    let source = balance_downsample(car, derive_seed(&[seed, 1]))?;
    let sources = train_source_models(&source, models, seed)?;
    let (ensemble, trace) = train_transfer(&source, micro, &models.tradaboost, derive_seed(&[seed, 3]))?;
    Ok(TrainedModels { sources, ensemble, trace })
}

/// One seed: balance the source, fit the source-only models once, then run
/// every target fold.
pub fn run_seed(car: &Dataset, micro: &Dataset, models: &ModelsConfig, k: usize, seed: u64) -> Result<SeedRun> {
    let source = balance_downsample(car, derive_seed(&[seed, 1]))?;
    let sources = train_source_models(&source, models, seed)?;
    let folds = group_kfold(&micro.participants(), k, derive_seed(&[seed, 2]))?;
    let results = (0..k)
        .into_par_iter()
        .map(|f| {
            run_fold(f, &folds, &source, &sources, micro, models, seed)
                .map_err(|e| Error::Fold { fold: f, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun { seed, folds, forest_grid: sources.grid, n_source_balanced: source.len(), results })
}

/// The full comparison over `seeds`; a pure function of its arguments.
pub fn run_crossdomain_eval(
    car: &Dataset,
    micro: &Dataset,
    models: &ModelsConfig,
    k: usize,
    seeds: &[u64],
) -> Result<EvalReport> {
    models.validate()?;
    if car.is_empty() || micro.is_empty() {
        return Err(invalid("both domains need windows"));
    }
    if car.windows.iter().any(|w| w.domain != DomainTag::Car)
        || micro.windows.iter().any(|w| w.domain != DomainTag::MicroMobility)
    {
        return Err(invalid("source must be car windows and target micro-mobility windows"));
    }
    if seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    let n_target_participants = micro.participants().len();
    if k > n_target_participants {
        return Err(invalid(format!("k = {k} exceeds the {n_target_participants} target participants")));
    }
    let runs: Vec<SeedRun> = seeds.iter().map(|&s| run_seed(car, micro, models, k, s)).collect::<Result<_>>()?;
    let summaries = MODEL_NAMES
        .iter()
        .map(|&name| {
            let (acc, aucs): (Vec<f64>, Vec<f64>) = runs.iter().map(|r| r.mean_metrics(name)).unzip();
            let n = runs.len() as f64;
            ModelSummary {
                model: name.to_string(),
                accuracy: acc.iter().sum::<f64>() / n,
                auc: aucs.iter().sum::<f64>() / n,
                median_auc: median(&aucs),
                seed_accuracy: acc,
                seed_auc: aucs,
            }
        })
        .collect();
    Ok(EvalReport {
        config_digest: None,
        seeds: seeds.to_vec(),
        k,
        n_source: car.len(),
        n_target: micro.len(),
        models: summaries,
        runs,
        ttests: domain_ttests(car, micro)?,
    })
}

impl EvalReport {
    pub fn model(&self, name: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `model,seed,fold,accuracy,auc,tp,fp,tn,fn` per fold.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("model,seed,fold,accuracy,auc,tp,fp,tn,fn\n");
        for run in &self.runs {
            for r in &run.results {
                for m in &r.models {
                    let c = m.confusion;
                    let _ = writeln!(
                        out,
                        "{},{},{},{:?},{:?},{},{},{},{}",
                        m.model, run.seed, r.fold, m.accuracy, m.auc, c.tp, c.fp, c.tn, c.fn_
                    );
                }
            }
        }
        out
    }

    /// `model,seed,fold,fpr,tpr`.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("model,seed,fold,fpr,tpr\n");
        for run in &self.runs {
            for r in &run.results {
                for m in &r.models {
                    for p in &m.roc {
                        let _ = writeln!(out, "{},{},{},{:?},{:?}", m.model, run.seed, r.fold, p.fpr, p.tpr);
                    }
                }
            }
        }
        out
    }

    /// `seed,fold,iteration,source_sum,target_sum,target_fraction,target_error,beta_t`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("seed,fold,iteration,source_sum,target_sum,target_fraction,target_error,beta_t\n");
        for run in &self.runs {
            for r in &run.results {
                for row in &r.trace.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:?},{:?},{:?},{:?},{:?}",
                        run.seed,
                        r.fold,
                        row.iteration,
                        row.source_sum,
                        row.target_sum,
                        row.target_sum / (row.source_sum + row.target_sum),
                        row.target_error,
                        row.beta_t
                    );
                }
            }
        }
        out
    }

    /// `feature,n,car_mean,micro_mean,t,df,p,degenerate`.
    pub fn ttest_csv(&self) -> String {
        let mut out = String::from("feature,n,car_mean,micro_mean,t,df,p,degenerate\n");
        for row in &self.ttests {
            let t = &row.test;
            let _ = writeln!(
                out,
                "{},{},{:?},{:?},{:?},{},{:?},{}",
                row.feature, row.n, row.car_mean, row.micro_mean, t.t, t.df, t.p, t.degenerate
            );
        }
        out
    }
}
