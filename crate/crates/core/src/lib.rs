//! Self-supervised multiple object tracking with autoencoder embeddings and
//! minimum cost lifted multicuts.
//!
//! The pipeline groups detections into tracklets from confident
//! spatio-temporal matches, trains a convolutional autoencoder whose latent
//! space is pulled towards tracklet centroids, fits logistic edge models on
//! labels derived from match overlap, and partitions the detection graph with
//! a lifted multicut solver. Each stage is usable on its own:
//!
//! - [`graph`] and [`solver`]: multicut instances, feasibility, exact and
//!   heuristic solvers.
//! - [`embedding`]: the autoencoder, its losses and training loop.
//! - [`affinity`]: match tables, edge features, logistic models, edge costs.
//! - [`pipeline`]: pre-grouping, end-to-end tracking, cluster-to-track
//!   conversion.
//! - [`mot`]: MOTChallenge files, CLEAR MOT metrics, synthetic sequences and
//!   the feature ablation.

pub mod affinity;
pub mod detection;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod mot;
pub mod pipeline;
pub mod solver;

pub use detection::{Detection, ImagePatch};
pub use error::{Error, Result, Stage};
pub use geometry::{iou, BBox};
pub use graph::{build_graph, labeling_to_partition, Edge, EdgeKind, EdgeLabeling, MulticutInstance, Partition};
