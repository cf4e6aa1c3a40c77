//! Deterministic federated-learning simulator.
//!
//! Trains small fully-connected classifiers with FedMMB (clients consume a
//! configurable number of mini-batches per round; FedSMB is the one-batch
//! case), FedAvg, or centralized mini-batch gradient descent, over IID and
//! label-skewed client partitions. Every random draw is a pure function of
//! explicit seeds, so runs are bit-reproducible, with or without parallel
//! client execution.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the element type; the 64-bit ones are the defaults used
//! by the CLI and the acceptance suite.

pub mod data;
mod error;
pub mod fed;
pub mod nn;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = nn::Tensor<f64>;
pub type Weights = nn::ModelWeights<f64>;
pub type Batch = nn::Batch<f64>;
pub type Dataset = data::Dataset<f64>;
pub type ClientDataset = data::ClientDataset<f64>;
pub type ClientState = fed::ClientState<f64>;
pub type RunOutput = fed::RunOutput<f64>;

pub type Tensor32 = nn::Tensor<f32>;
pub type Weights32 = nn::ModelWeights<f32>;
pub type Batch32 = nn::Batch<f32>;
pub type Dataset32 = data::Dataset<f32>;
pub type ClientDataset32 = data::ClientDataset<f32>;
pub type ClientState32 = fed::ClientState<f32>;
pub type RunOutput32 = fed::RunOutput<f32>;
