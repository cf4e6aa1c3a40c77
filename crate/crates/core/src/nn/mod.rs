//! Minimal dense neural-network engine: fully-connected layers with ReLU,
//! softmax cross-entropy, analytic backpropagation and plain SGD.

mod gradcheck;
mod model;
mod ops;
mod tensor;

pub use gradcheck::{finite_diff_grad, max_relative_error};
pub use model::{init_weights, Dense, Gradients, ModelWeights, NetworkSpec};
pub use ops::{compute_gradients, evaluate, forward, sgd_step, Batch, Evaluation, Forward};
pub use tensor::Tensor;
