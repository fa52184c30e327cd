//! Metrics, grouped folds, paired t-tests and the cross-domain experiment.

pub mod experiment;
pub mod folds;
pub mod metrics;
pub mod ttest;

pub use experiment::{
    domain_ttests, run_crossdomain_eval, run_seed, train_all, train_source_models, train_transfer, EvalReport,
    FeatureTTest, FoldMetrics, FoldResult, ModelSummary, ModelsConfig, SeedRun, SourceModels, TrainedModels,
    MODEL_NAMES,
};
pub use folds::{group_kfold, FoldAssignment};
pub use metrics::{accuracy, auc, confusion, roc_curve, Confusion, RocPoint};
pub use ttest::{paired_ttest, two_tailed_p, TTest};
