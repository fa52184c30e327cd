//! Base learners: a weighted random forest and the DualTake MLP.

pub mod adam;
pub(crate) mod depth;
pub mod forest;
pub mod grid;
pub mod matrix;
pub mod mlp;

use serde::{Deserialize, Serialize};

pub use adam::{AdamConfig, AdamState};
pub use forest::{gini, train_forest, Forest, ForestHyperParams, Node, Tree};
pub use grid::{grid_search_forest, ForestGrid, GridSearchResult};
pub use matrix::{normalized_weights, Matrix};
pub use mlp::{bce_loss, train_mlp, Activations, Mlp, MlpHyperParams, Mode};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transfer::BoostedEnsemble;

/// Anything that maps a feature vector to a takeover score in `[0, 1]`.
pub trait Classifier<T: Scalar> {
    fn predict_score(&self, x: &[T]) -> Result<T>;

    fn predict_all(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        x.iter_rows().map(|r| self.predict_score(r)).collect()
    }
}

/// A trained predictor of any variant, as persisted on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Model<T> {
    Forest(Forest<T>),
    Mlp(Mlp<T>),
    Ensemble(BoostedEnsemble<T>),
}

impl<T: Scalar> Model<T> {
    pub fn variant(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Mlp(_) => "mlp",
            Model::Ensemble(_) => "ensemble",
        }
    }

    /// Self-describing JSON text; parsing it back yields an identical model.
    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::from)
    }
}

impl<T: Scalar> Classifier<T> for Model<T> {
    fn predict_score(&self, x: &[T]) -> Result<T> {
        match self {
            Model::Forest(f) => f.predict_score(x),
            Model::Mlp(m) => m.predict_score(x),
            Model::Ensemble(e) => e.predict_score(x),
        }
    }
}
