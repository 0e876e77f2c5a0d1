//! Neighborhood-based rating prediction with learned item-item similarity.
//!
//! Similarity is treated as a latent quantity and estimated by stochastic
//! gradient descent on a regularized squared-error objective. The
//! similarity may be composed from several layers, each a learned basis
//! gated by a fixed constraint matrix (Pearson, Jaccard, all-ones) and
//! weighted by a fixed importance factor. Classical Pearson and cosine
//! neighborhood models are included for comparison.
//!
//! Modules, bottom-up:
//!
//! - [`data`]: loading, splitting, mean-centering.
//! - [`similarity`]: static similarity matrices and neighbor ranking.
//! - [`nbm`]: neighborhood prediction.
//! - [`model`]: the layered similarity, its gradients and checkpoints.
//! - [`training`]: the SGD loop and model presets.
//! - [`evaluation`]: RMSE, stability, repeats and density sweeps.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod nbm;
pub mod similarity;
pub mod synthetic;
pub mod training;

pub use data::{center, load_ratings, split, CenteredView, Rating, RatingDataset, RatingFormat, Split, SplitSpec};
pub use error::{Error, Result};
pub use evaluation::{rmse, stability, EvalReport, ExperimentSpec, RepeatMode, Stability};
pub use model::{Checkpoint, RegForm, Regularizer, SimilarityLayers, Variant};
pub use nbm::{Prediction, Predictor, Workspace};
pub use similarity::{ConstraintKind, ConstraintMatrix};
pub use training::{make_baseline, train, Constraints, Model, ModelKind, TrainConfig, TrainHistory};
