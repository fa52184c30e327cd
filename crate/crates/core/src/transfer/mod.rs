//! Instance-based domain adaptation with TrAdaBoost.
//!
//! Source (car) and target (micro-mobility) instances share one weight
//! vector. After each boosting round, misclassified source instances lose
//! weight by `β^(λe)` with the fixed `β = 1 / (1 + √(2 ln n_source / N))`,
//! while misclassified target instances gain weight by `β_t^(-λe)`, where
//! `β_t = ε_t / (1 - ε_t)` and `ε_t` is the weighted error on the target part.
//! The final vote uses the second half of the rounds, each weighted by
//! `ln(1 / β_t)`.

mod tradaboost;

pub use tradaboost::*;
