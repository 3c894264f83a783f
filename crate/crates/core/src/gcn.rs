//! Forward propagation and losses for `d`-layer GCNs.
//!
//! Layer `s` computes `H_s = Σ_s(P·H_{s−1}·W_s)` where `P` is the raw
//! adjacency `A` or the normalized `Â`. Node classification reads out
//! `Ŷ = Σ_{d+1}(H_d)` (with `n_d = 1`); link prediction reads out
//! `Ŷ = Σ_{d+1}(H_d·H_dᵀ)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

/// Lower clamp for log arguments; the upper clamp is `1 − LOSS_EPS`.
pub const LOSS_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Node,
    Link,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Node => "node",
            Task::Link => "link",
        }
    }

    /// Raw adjacency for node classification, `Â` for link prediction.
    pub fn default_propagation(&self) -> Propagation {
        match self {
            Task::Node => Propagation::Adjacency,
            Task::Link => Propagation::Normalized,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    Adjacency,
    Normalized,
}

impl Propagation {
    pub fn matrix(&self, graph: &Graph) -> Matrix {
        match self {
            Propagation::Adjacency => graph.adjacency(),
            Propagation::Normalized => graph.normalized_adjacency(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnModel {
    task: Task,
    propagation: Propagation,
    weights: Vec<Matrix>,
    activations: Vec<Activation>,
}

impl GcnModel {
    /// `weights[s-1]` is `W_s`; `activations` holds `Σ_1 … Σ_{d+1}`.
    pub fn new(
        task: Task,
        propagation: Propagation,
        weights: Vec<Matrix>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        let dims = chain_dims(&weights)?;
        validate_architecture(task, &dims, &activations)?;
        Ok(Self {
            task,
            propagation,
            weights,
            activations,
        })
    }

    /// Weights drawn uniformly on `±√(6/(n_{s−1}+n_s))`.
    pub fn glorot<R: Rng + ?Sized>(
        task: Task,
        propagation: Propagation,
        dims: &[usize],
        activations: Vec<Activation>,
        rng: &mut R,
    ) -> Result<Self> {
        validate_architecture(task, dims, &activations)?;
        let weights = glorot_weights(dims, rng);
        Self::new(task, propagation, weights, activations)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn propagation(&self) -> Propagation {
        self.propagation
    }

    /// Number of graph-convolution layers `d`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// `n_0 … n_d`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.weights.len() + 1);
        dims.push(self.weights[0].rows());
        dims.extend(self.weights.iter().map(Matrix::cols));
        dims
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    /// `W_s` for `s` in `1..=d`.
    pub fn weight(&self, s: usize) -> &Matrix {
        &self.weights[s - 1]
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    /// `Σ_s` for `s` in `1..=d+1`.
    pub fn activation(&self, s: usize) -> Activation {
        self.activations[s - 1]
    }

    /// Replaces the weights, keeping the architecture.
    pub fn set_weights(&mut self, weights: Vec<Matrix>) -> Result<()> {
        let dims = chain_dims(&weights)?;
        if dims != self.dims() {
            return Err(Error::Model(format!(
                "weight shapes {dims:?} do not match architecture {:?}",
                self.dims()
            )));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn with_weights(&self, weights: Vec<Matrix>) -> Result<Self> {
        let mut m = self.clone();
        m.set_weights(weights)?;
        Ok(m)
    }

    /// FNV-1a over the architecture and every weight bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.task as u64);
        eat(self.propagation as u64);
        for w in &self.weights {
            eat(w.rows() as u64);
            eat(w.cols() as u64);
            for v in w.as_slice() {
                eat(v.to_bits());
            }
        }
        for a in &self.activations {
            let (tag, p) = match *a {
                Activation::Identity => (0, 0.0),
                Activation::Sigmoid => (1, 0.0),
                Activation::Relu => (2, 0.0),
                Activation::LeakyRelu { slope } => (3, slope),
                Activation::Elu { alpha } => (4, alpha),
                Activation::Silu => (5, 0.0),
            };
            eat(tag);
            eat(p.to_bits());
        }
        h
    }
}

pub(crate) fn glorot_weights<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Vec<Matrix> {
    dims.windows(2)
        .map(|w| {
            let bound = libm::sqrt(6.0 / (w[0] + w[1]) as f64);
            Matrix::from_fn(w[0], w[1], |_, _| rng.gen_range(-bound..bound))
        })
        .collect()
}

fn chain_dims(weights: &[Matrix]) -> Result<Vec<usize>> {
    let first = weights
        .first()
        .ok_or_else(|| Error::Model("a GCN needs at least one layer".into()))?;
    let mut dims = Vec::with_capacity(weights.len() + 1);
    dims.push(first.rows());
    for (s, w) in weights.iter().enumerate() {
        if w.rows() != *dims.last().unwrap_or(&0) {
            return Err(Error::Model(format!(
                "W{} has {} rows but the previous layer has width {}",
                s + 1,
                w.rows(),
                dims[dims.len() - 1]
            )));
        }
        dims.push(w.cols());
    }
    Ok(dims)
}

pub(crate) fn validate_architecture(task: Task, dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Model("a GCN needs at least one layer".into()));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::Model(format!("layer width n{pos} is zero")));
    }
    let depth = dims.len() - 1;
    if activations.len() != depth + 1 {
        return Err(Error::Model(format!(
            "{depth} layers need {} activations, got {}",
            depth + 1,
            activations.len()
        )));
    }
    for a in activations {
        a.validate()?;
    }
    if task == Task::Node && dims[depth] != 1 {
        return Err(Error::Model(format!(
            "binary node classification needs n_d = 1, got {}",
            dims[depth]
        )));
    }
    Ok(())
}

/// Every intermediate of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCache {
    /// `P`, the propagation matrix (`A` or `Â`).
    pub propagation: Matrix,
    /// `H_0 … H_d`.
    pub hidden: Vec<Matrix>,
    /// `P·H_{s−1}` for `s = 1..=d` (index `s − 1`).
    pub aggregated: Vec<Matrix>,
    /// `Z_s = (P·H_{s−1})·W_s` for `s = 1..=d` (index `s − 1`).
    pub pre_activations: Vec<Matrix>,
    /// Argument of `Σ_{d+1}`: `H_d` (node) or `H_d·H_dᵀ` (link).
    pub readout: Matrix,
    /// `Ŷ`.
    pub output: Matrix,
    /// [`GcnModel::fingerprint`] of the model that produced this cache.
    pub fingerprint: u64,
}

impl ForwardCache {
    pub fn depth(&self) -> usize {
        self.pre_activations.len()
    }

    /// `H_s` for `s` in `0..=d`.
    pub fn h(&self, s: usize) -> &Matrix {
        &self.hidden[s]
    }

    /// `Z_s` for `s` in `1..=d`.
    pub fn z(&self, s: usize) -> &Matrix {
        &self.pre_activations[s - 1]
    }

    /// `P·H_{s−1}` for `s` in `1..=d`.
    pub fn ph(&self, s: usize) -> &Matrix {
        &self.aggregated[s - 1]
    }

    pub fn check_fresh(&self, model: &GcnModel) -> Result<()> {
        if self.fingerprint == model.fingerprint() {
            Ok(())
        } else {
            Err(Error::StaleCache)
        }
    }
}

pub fn forward(model: &GcnModel, graph: &Graph) -> Result<ForwardCache> {
    forward_with(model, model.propagation().matrix(graph), graph.features().clone())
}

/// Forward pass with an explicit propagation matrix and feature matrix.
pub fn forward_with(model: &GcnModel, propagation: Matrix, features: Matrix) -> Result<ForwardCache> {
    let n = propagation.rows();
    if propagation.cols() != n || features.rows() != n {
        return Err(Error::Dimension {
            op: "forward",
            left: propagation.shape(),
            right: features.shape(),
        });
    }
    if features.cols() != model.weight(1).rows() {
        return Err(Error::Dimension {
            op: "forward features vs W1",
            left: features.shape(),
            right: model.weight(1).shape(),
        });
    }
    let d = model.depth();
    let mut hidden = Vec::with_capacity(d + 1);
    let mut aggregated = Vec::with_capacity(d);
    let mut pre_activations = Vec::with_capacity(d);
    hidden.push(features);
    for s in 1..=d {
        let ph = propagation.matmul(&hidden[s - 1])?;
        let z = ph.matmul(model.weight(s))?;
        hidden.push(model.activation(s).apply(&z));
        aggregated.push(ph);
        pre_activations.push(z);
    }
    let h_d = &hidden[d];
    let readout = match model.task() {
        Task::Node => h_d.clone(),
        Task::Link => h_d.matmul(&h_d.transpose())?,
    };
    let output = model.activation(d + 1).apply(&readout);
    Ok(ForwardCache {
        propagation,
        hidden,
        aggregated,
        pre_activations,
        readout,
        output,
        fingerprint: model.fingerprint(),
    })
}

/// A loss value computed with clamped log arguments, plus whether the
/// unclamped evaluation would have been non-finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub unclamped: f64,
}

impl LossValue {
    /// True when the unclamped loss is NaN or infinite.
    pub fn is_nan_flagged(&self) -> bool {
        !self.unclamped.is_finite()
    }
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    // NaN passes through unchanged.
    p.clamp(LOSS_EPS, 1.0 - LOSS_EPS)
}

/// `L = −Σ_ij (y_ij ln ŷ_ij + (1 − y_ij) ln(1 − ŷ_ij))`.
pub fn node_loss(y: &Matrix, y_hat: &Matrix) -> Result<LossValue> {
    if y.shape() != y_hat.shape() {
        return Err(Error::Dimension {
            op: "node_loss",
            left: y.shape(),
            right: y_hat.shape(),
        });
    }
    let mut value = 0.0;
    let mut unclamped = 0.0;
    for (&t, &p) in y.as_slice().iter().zip(y_hat.as_slice()) {
        let c = clamp_prob(p);
        value -= t * libm::log(c) + (1.0 - t) * libm::log(1.0 - c);
        unclamped -= t * libm::log(p) + (1.0 - t) * libm::log(1.0 - p);
    }
    Ok(LossValue { value, unclamped })
}

/// `L = −Σ_{(i,j)∈E} ln ŷ_ij − Σ_{(i,j)∈S} ln(1 − ŷ_ij)`, each listed pair once.
pub fn link_loss(y_hat: &Matrix, positives: &[(usize, usize)], negatives: &[(usize, usize)]) -> Result<LossValue> {
    let mut value = 0.0;
    let mut unclamped = 0.0;
    for &(i, j) in positives {
        let p = y_hat.try_get(i, j)?;
        value -= libm::log(clamp_prob(p));
        unclamped -= libm::log(p);
    }
    for &(i, j) in negatives {
        let p = y_hat.try_get(i, j)?;
        value -= libm::log(1.0 - clamp_prob(p));
        unclamped -= libm::log(1.0 - p);
    }
    Ok(LossValue { value, unclamped })
}

/// Fraction of nodes whose thresholded prediction (`ŷ ≥ 0.5` → 1) matches
/// the label.
pub fn accuracy(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    if y.shape() != y_hat.shape() {
        return Err(Error::Dimension {
            op: "accuracy",
            left: y.shape(),
            right: y_hat.shape(),
        });
    }
    let hits = y
        .as_slice()
        .iter()
        .zip(y_hat.as_slice())
        .filter(|(&t, &p)| (p >= 0.5) == (t == 1.0))
        .count();
    Ok(hits as f64 / y.as_slice().len().max(1) as f64)
}

/// Thresholded class predictions.
pub fn predictions(y_hat: &Matrix) -> Vec<bool> {
    y_hat.as_slice().iter().map(|&p| p >= 0.5).collect()
}
