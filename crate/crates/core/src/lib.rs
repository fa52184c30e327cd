//! Cross-mobility takeover prediction workbench.
//!
//! Synthetic dual-mobility cohorts ([`synth`]) are reduced to 52-feature
//! windows ([`pipeline`]), learned with a random forest or an MLP
//! ([`learners`]), adapted from car to micro-mobility with TrAdaBoost
//! ([`transfer`]) and scored with participant-grouped cross-validation
//! ([`eval`]).
//!
//! The numeric kernels are generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below pin the common choices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod domain;
pub mod error;
pub mod eval;
pub mod layout;
pub mod learners;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod transfer;

pub use dataset::{Dataset, FeatureWindow};
pub use domain::{
    validate_session, Aggressiveness, Condition, DomainTag, Modality, ModalityStream, ObjectClass, Session,
};
pub use error::{Error, Result};
pub use layout::{feature_index, FeatureGroup, FeatureLayout, N_FEATURES};
pub use scalar::Scalar;

/// Double-precision instantiations.
pub type Forest64 = learners::Forest<f64>;
pub type Mlp64 = learners::Mlp<f64>;
pub type Ensemble64 = transfer::BoostedEnsemble<f64>;
pub type Model64 = learners::Model<f64>;
pub type Matrix64 = learners::Matrix<f64>;

/// Single-precision instantiations.
pub type Forest32 = learners::Forest<f32>;
pub type Mlp32 = learners::Mlp<f32>;
pub type Ensemble32 = transfer::BoostedEnsemble<f32>;
pub type Model32 = learners::Model<f32>;
pub type Matrix32 = learners::Matrix<f32>;
