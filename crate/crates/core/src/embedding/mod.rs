//! Convolutional autoencoder trained with a reconstruction loss plus a
//! clustering loss towards tracklet centroids.
//!
//! Everything is implemented from scratch in `f64`: layers with manual
//! backward passes, SGD on per-frame batches, a finite-difference gradient
//! checker and a binary checkpoint format.

pub mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod model;
mod tensor;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport, FD_STEP};
pub use layers::{Layer, LayerSpec, Mode};
pub use loss::{
    combined_loss, compute_centroids, loss_and_gradients, reconstruction_loss, CentroidTable, Gradients, LossParts,
};
pub use model::{ArchConfig, AutoEncoderModel, LatentVector};
pub use tensor::Tensor;
pub use train::{train, train_with, EpochStats, LossTrace, TrainingConfig, TrainingSet};
