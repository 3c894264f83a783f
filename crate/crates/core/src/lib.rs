//! Closed-form backpropagation for multi-layer graph convolutional networks.
//!
//! The gradients of the binary node-classification and link-prediction losses
//! with respect to every weight matrix (and the input feature matrix) are
//! assembled from Kronecker products, Hadamard products and the structured
//! permutation matrices `U` and `Ū`, using the block-derivative layout in which
//! `∂F/∂X` for an `m×n` function of a `p×q` matrix is a `(pm)×(qn)` matrix whose
//! `(i, j)` block is `∂F/∂x_ij`.
//!
//! Two independent references live in [`oracle`]: central finite differences
//! and a small reverse-mode tape. [`train`] runs paired SGD experiments that
//! train one weight copy per gradient method from a shared initialization.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod activation;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod matgrad;
pub mod matrix;
pub mod oracle;
pub mod presets;
pub mod stats;
pub mod train;

pub use activation::Activation;
pub use error::{Error, Result};
pub use gcn::{forward, link_loss, node_loss, ForwardCache, GcnModel, LossValue, Propagation, Task};
pub use graph::{Graph, NegativeSample};
pub use matgrad::{SensitivityMap, SensitivitySubject, Targets};
pub use matrix::{BlockDerivative, Matrix};
pub use train::{ExperimentConfig, GradMethod, ModelSpec, TrainLog};
