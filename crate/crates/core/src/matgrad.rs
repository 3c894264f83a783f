//! Closed-form gradients of the GCN losses, assembled literally from the
//! Kronecker-calculus recursions.
//!
//! Differentiation variables are either a weight matrix `W_s` (`n_{s−1}×n_s`)
//! or the feature matrix `H_0` (`n×n_0`). With `(p, q)` the shape of the
//! variable, the hidden-layer derivatives follow
//!
//! ```text
//! ∂H_r/∂W_s  = (J_{p×q} ⊗ Σ′_r(Z_r)) ⊙ ((I_p ⊗ P·H_{r−1}) Ū_{p×q})              r = s
//!            = (J_{p×q} ⊗ Σ′_r(Z_r)) ⊙ ((I_p ⊗ P) ∂H_{r−1}/∂W_s (I_q ⊗ W_r))    r > s
//! ∂H_rᵀ/∂W_s = (J_{p×q} ⊗ Σ′_r(Z_r)ᵀ) ⊙ (U_{p×q} (I_q ⊗ (P·H_{r−1})ᵀ))          r = s
//!            = (J_{p×q} ⊗ Σ′_r(Z_r)ᵀ) ⊙ ((I_p ⊗ W_rᵀ) ∂H_{r−1}ᵀ/∂W_s (I_q ⊗ Pᵀ)) r > s
//! ```
//!
//! and for `H_0` the base layer is `r = 1` with `(I_n ⊗ P) Ū_{n×n_0} (I_{n_0} ⊗ W_1)`
//! and `(I_n ⊗ W_1ᵀ) U_{n×n_0} (I_{n_0} ⊗ Pᵀ)` in place of the weight base cases.
//! `Z_r = P·H_{r−1}·W_r` and every structured matrix is materialized densely.

use alloc::vec::Vec;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::gcn::{clamp_prob, ForwardCache, GcnModel, Task};
use crate::graph::canonical;
use crate::matrix::{permutation_u, related_ubar, unit_vector, BlockDerivative, Matrix};

/// Supervision for one loss evaluation.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    Node {
        labels: &'a Matrix,
    },
    /// Positive edges `E` and sampled negatives `S`, each pair counted once.
    Link {
        positives: &'a [(usize, usize)],
        negatives: &'a [(usize, usize)],
    },
}

/// Everything one weight-gradient evaluation needs. `layer` is `s`, 1-based.
#[derive(Clone, Copy, Debug)]
pub struct GradRequest<'a> {
    pub model: &'a GcnModel,
    pub cache: &'a ForwardCache,
    pub targets: Targets<'a>,
    pub layer: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensitivitySubject {
    Loss,
    OutputEntry(usize, usize),
}

/// Derivative of the loss or of one output entry with respect to `H_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityMap {
    pub subject: SensitivitySubject,
    pub value: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Variable {
    Weight(usize),
    Features,
}

/// Per-call workspace. Structured matrices and the hidden-layer derivative
/// chain are built once and shared by every `(i, j)` term.
struct Calculus<'a> {
    model: &'a GcnModel,
    cache: &'a ForwardCache,
    var: Variable,
    p: usize,
    q: usize,
    ip_kron_prop: Option<Matrix>,
    iq_kron_prop_t: Option<Matrix>,
    ubar: Option<Matrix>,
    u: Option<Matrix>,
    last_hidden: Option<Matrix>,
    last_hidden_t: Option<Matrix>,
}

fn chain(act: Activation, f: &Matrix, outer: (usize, usize), payload: Matrix) -> Result<Matrix> {
    let df = BlockDerivative::new(outer, f.shape(), payload)?;
    Ok(act.chain_deriv(f, &df)?.into_payload())
}

impl<'a> Calculus<'a> {
    fn new(model: &'a GcnModel, cache: &'a ForwardCache, var: Variable) -> Result<Self> {
        cache.check_fresh(model)?;
        let d = model.depth();
        let (p, q) = match var {
            Variable::Weight(s) => {
                if s == 0 || s > d {
                    return Err(Error::Layer { layer: s, depth: d });
                }
                model.weight(s).shape()
            }
            Variable::Features => cache.h(0).shape(),
        };
        Ok(Self {
            model,
            cache,
            var,
            p,
            q,
            ip_kron_prop: None,
            iq_kron_prop_t: None,
            ubar: None,
            u: None,
            last_hidden: None,
            last_hidden_t: None,
        })
    }

    fn base_layer(&self) -> usize {
        match self.var {
            Variable::Weight(s) => s,
            Variable::Features => 1,
        }
    }

    fn ubar(&mut self) -> &Matrix {
        let (p, q) = (self.p, self.q);
        self.ubar.get_or_insert_with(|| related_ubar(p, q))
    }

    fn u(&mut self) -> &Matrix {
        let (p, q) = (self.p, self.q);
        self.u.get_or_insert_with(|| permutation_u(p, q))
    }

    /// `I_p ⊗ P`.
    fn ip_kron_prop(&mut self) -> &Matrix {
        let p = self.p;
        let prop = &self.cache.propagation;
        self.ip_kron_prop.get_or_insert_with(|| Matrix::identity(p).kron(prop))
    }

    /// `I_q ⊗ Pᵀ`.
    fn iq_kron_prop_t(&mut self) -> &Matrix {
        let q = self.q;
        let prop = &self.cache.propagation;
        self.iq_kron_prop_t.get_or_insert_with(|| Matrix::identity(q).kron(&prop.transpose()))
    }

    /// `I_k ⊗ m`.
    fn ik(k: usize, m: &Matrix) -> Matrix {
        Matrix::identity(k).kron(m)
    }

    /// Payload of `∂H_r/∂X` (or `∂H_rᵀ/∂X`) for every `r` from the base layer
    /// up to `top`, returning the one at `top`.
    fn hidden_chain(&mut self, top: usize, transposed: bool) -> Result<Matrix> {
        let base = self.base_layer();
        if top < base {
            return Err(Error::Layer { layer: top, depth: base });
        }
        let (p, q) = (self.p, self.q);
        let model = self.model;
        let cache = self.cache;
        let act = model.activation(base);
        let z = cache.z(base);
        let z_t = z.transpose();
        let mut current = match (self.var, transposed) {
            (Variable::Weight(s), false) => {
                let inner = Self::ik(p, cache.ph(s)).matmul(self.ubar())?;
                chain(act, z, (p, q), inner)?
            }
            (Variable::Weight(s), true) => {
                let right = Self::ik(q, &cache.ph(s).transpose());
                let inner = self.u().matmul(&right)?;
                chain(act, &z_t, (p, q), inner)?
            }
            (Variable::Features, false) => {
                let right = Self::ik(q, model.weight(1));
                let ubar = self.ubar().clone();
                let left = self.ip_kron_prop().matmul(&ubar)?;
                chain(act, z, (p, q), left.matmul(&right)?)?
            }
            (Variable::Features, true) => {
                let left = Self::ik(p, &model.weight(1).transpose());
                let mid = left.matmul(self.u())?;
                let inner = mid.matmul(self.iq_kron_prop_t())?;
                chain(act, &z_t, (p, q), inner)?
            }
        };
        for r in base + 1..=top {
            let act = model.activation(r);
            let z = cache.z(r);
            current = if transposed {
                let left = Self::ik(p, &model.weight(r).transpose());
                let inner = left.matmul(&current)?.matmul(self.iq_kron_prop_t())?;
                chain(act, &z.transpose(), (p, q), inner)?
            } else {
                let right = Self::ik(q, model.weight(r));
                let inner = self.ip_kron_prop().matmul(&current)?.matmul(&right)?;
                chain(act, z, (p, q), inner)?
            };
        }
        Ok(current)
    }

    /// `∂H_{d−1}/∂X`, built on first use.
    fn last_hidden(&mut self, transposed: bool) -> Result<Matrix> {
        let top = self.model.depth() - 1;
        let slot = if transposed { &self.last_hidden_t } else { &self.last_hidden };
        if let Some(m) = slot {
            return Ok(m.clone());
        }
        let m = self.hidden_chain(top, transposed)?;
        if transposed {
            self.last_hidden_t = Some(m.clone());
        } else {
            self.last_hidden = Some(m.clone());
        }
        Ok(m)
    }

    /// Does the variable sit directly in the last layer's product, so that
    /// no hidden-layer chain is involved?
    fn in_last_product(&self) -> bool {
        match self.var {
            Variable::Weight(s) => s == self.model.depth(),
            Variable::Features => self.model.depth() == 1,
        }
    }

    /// `∂(P_{i*} H_{d−1} W_d · w)/∂X` where `w` is `W_d` itself (`right =
    /// None`, a `1×n_d` row) or the column selector `e_j` (node task).
    fn row_product_deriv(&mut self, i: usize, column: Option<usize>) -> Result<Matrix> {
        let d = self.model.depth();
        let (p, q) = (self.p, self.q);
        let w_d = self.model.weight(d);
        let w_tail = match column {
            Some(j) => w_d.col(j),
            None => w_d.clone(),
        };
        if self.in_last_product() {
            match self.var {
                Variable::Weight(_) => {
                    let agg_row = self.cache.ph(d).row(i);
                    let mut out = Self::ik(p, &agg_row).matmul(self.ubar())?;
                    if let Some(j) = column {
                        out = out.matmul(&Self::ik(q, &unit_vector(w_d.cols(), j)?))?;
                    }
                    Ok(out)
                }
                Variable::Features => {
                    let prop_row = self.cache.propagation.row(i);
                    Self::ik(p, &prop_row)
                        .matmul(self.ubar())?
                        .matmul(&Self::ik(q, &w_tail))
                }
            }
        } else {
            let prop_row = self.cache.propagation.row(i);
            let dh = self.last_hidden(false)?;
            Self::ik(p, &prop_row).matmul(&dh)?.matmul(&Self::ik(q, &w_tail))
        }
    }

    /// `∂(P_{j*} H_{d−1} W_d)ᵀ/∂X`, of shape `(p·n_d)×q`.
    fn row_product_deriv_t(&mut self, j: usize) -> Result<Matrix> {
        let d = self.model.depth();
        let (p, q) = (self.p, self.q);
        let w_d_t = self.model.weight(d).transpose();
        let prop_row_t = self.cache.propagation.row(j).transpose();
        if self.in_last_product() {
            match self.var {
                Variable::Weight(_) => {
                    let agg_col = self.cache.ph(d).row(j).transpose();
                    self.u().matmul(&Self::ik(q, &agg_col))
                }
                Variable::Features => {
                    let left = Self::ik(p, &w_d_t).matmul(self.u())?;
                    left.matmul(&Self::ik(q, &prop_row_t))
                }
            }
        } else {
            let dh_t = self.last_hidden(true)?;
            Self::ik(p, &w_d_t).matmul(&dh_t)?.matmul(&Self::ik(q, &prop_row_t))
        }
    }

    /// `∂h_{d,ij}/∂X` for the node task, with `h_{d,ij} = Σ_d(P_{i*} H_{d−1} W_{d,*j})`.
    fn node_hidden_entry_deriv(&mut self, i: usize, j: usize) -> Result<Matrix> {
        let d = self.model.depth();
        let dz = self.row_product_deriv(i, Some(j))?;
        let z = Matrix::filled(1, 1, self.cache.z(d).get(i, j));
        chain(self.model.activation(d), &z, (self.p, self.q), dz)
    }

    /// `∂ŷ_ij/∂X` for the link task.
    fn link_output_entry_deriv(&mut self, i: usize, j: usize) -> Result<Matrix> {
        let d = self.model.depth();
        let (p, q) = (self.p, self.q);
        let act_d = self.model.activation(d);
        let h_d = self.cache.h(d);

        let row_i = self.row_product_deriv(i, None)?;
        let left = chain(act_d, &self.cache.z(d).row(i), (p, q), row_i)?;
        let first = left.matmul(&Self::ik(q, &h_d.row(j).transpose()))?;

        let row_j_t = self.row_product_deriv_t(j)?;
        let right = chain(act_d, &self.cache.z(d).row(j).transpose(), (p, q), row_j_t)?;
        let second = Self::ik(p, &h_d.row(i)).matmul(&right)?;

        let outer = self.model.activation(d + 1).deriv(self.cache.readout.get(i, j));
        Ok(first.add(&second)?.scale(outer))
    }

    fn node_loss_deriv(&mut self, labels: &Matrix) -> Result<Matrix> {
        let y_hat = &self.cache.output;
        if labels.shape() != y_hat.shape() {
            return Err(Error::Dimension {
                op: "node labels",
                left: y_hat.shape(),
                right: labels.shape(),
            });
        }
        let d = self.model.depth();
        let act_out = self.model.activation(d + 1);
        let mut grad = Matrix::zeros(self.p, self.q);
        for i in 0..y_hat.rows() {
            for j in 0..y_hat.cols() {
                let raw = y_hat.get(i, j);
                let residual = labels.get(i, j) - raw;
                if residual == 0.0 {
                    continue;
                }
                let clamped = clamp_prob(raw);
                let coeff =
                    residual / (clamped * (1.0 - clamped)) * act_out.deriv(self.cache.h(d).get(i, j));
                if coeff == 0.0 {
                    continue;
                }
                let term = self.node_hidden_entry_deriv(i, j)?;
                grad.axpy(-coeff, &term)?;
            }
        }
        Ok(grad)
    }

    fn link_loss_deriv(&mut self, positives: &[(usize, usize)], negatives: &[(usize, usize)]) -> Result<Matrix> {
        check_disjoint(positives, negatives)?;
        let y_hat = &self.cache.output;
        let mut grad = Matrix::zeros(self.p, self.q);
        for (pairs, positive) in [(positives, true), (negatives, false)] {
            for &(i, j) in pairs {
                let clamped = clamp_prob(y_hat.try_get(i, j)?);
                let coeff = if positive {
                    -1.0 / clamped
                } else {
                    1.0 / (1.0 - clamped)
                };
                let term = self.link_output_entry_deriv(i, j)?;
                grad.axpy(coeff, &term)?;
            }
        }
        Ok(grad)
    }
}

fn check_disjoint(positives: &[(usize, usize)], negatives: &[(usize, usize)]) -> Result<()> {
    let mut pos: Vec<(usize, usize)> = positives.iter().map(|&(i, j)| canonical(i, j)).collect();
    pos.sort_unstable();
    for &(i, j) in negatives {
        if pos.binary_search(&canonical(i, j)).is_ok() {
            return Err(Error::EdgeOverlap(i, j));
        }
    }
    Ok(())
}

fn require_task(model: &GcnModel, task: Task, what: &'static str) -> Result<()> {
    if model.task() == task {
        Ok(())
    } else {
        Err(Error::Task(what))
    }
}

/// `∂L/∂W_s` for binary node classification.
pub fn node_weight_grad(req: &GradRequest<'_>) -> Result<Matrix> {
    require_task(req.model, Task::Node, "node_weight_grad needs a node-task model")?;
    let Targets::Node { labels } = req.targets else {
        return Err(Error::Task("node_weight_grad needs node labels"));
    };
    Calculus::new(req.model, req.cache, Variable::Weight(req.layer))?.node_loss_deriv(labels)
}

/// `∂L/∂W_s` for link prediction over positives `E` and negatives `S`.
pub fn link_weight_grad(req: &GradRequest<'_>) -> Result<Matrix> {
    require_task(req.model, Task::Link, "link_weight_grad needs a link-task model")?;
    let Targets::Link { positives, negatives } = req.targets else {
        return Err(Error::Task("link_weight_grad needs positive and negative pairs"));
    };
    Calculus::new(req.model, req.cache, Variable::Weight(req.layer))?.link_loss_deriv(positives, negatives)
}

/// Gradient with respect to every weight matrix, dispatched on the task.
pub fn weight_grads(model: &GcnModel, cache: &ForwardCache, targets: Targets<'_>) -> Result<Vec<Matrix>> {
    (1..=model.depth())
        .map(|layer| {
            let req = GradRequest {
                model,
                cache,
                targets,
                layer,
            };
            match model.task() {
                Task::Node => node_weight_grad(&req),
                Task::Link => link_weight_grad(&req),
            }
        })
        .collect()
}

/// `∂L/∂H_0` for node classification.
pub fn node_input_sensitivity(model: &GcnModel, cache: &ForwardCache, labels: &Matrix) -> Result<SensitivityMap> {
    require_task(model, Task::Node, "node_input_sensitivity needs a node-task model")?;
    let value = Calculus::new(model, cache, Variable::Features)?.node_loss_deriv(labels)?;
    Ok(SensitivityMap {
        subject: SensitivitySubject::Loss,
        value,
    })
}

/// `∂L/∂H_0` for link prediction.
pub fn link_input_sensitivity(
    model: &GcnModel,
    cache: &ForwardCache,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
) -> Result<SensitivityMap> {
    require_task(model, Task::Link, "link_input_sensitivity needs a link-task model")?;
    let value = Calculus::new(model, cache, Variable::Features)?.link_loss_deriv(positives, negatives)?;
    Ok(SensitivityMap {
        subject: SensitivitySubject::Loss,
        value,
    })
}

/// `∂ŷ_ij/∂H_0` for link prediction.
pub fn link_output_sensitivity(model: &GcnModel, cache: &ForwardCache, i: usize, j: usize) -> Result<SensitivityMap> {
    require_task(model, Task::Link, "link_output_sensitivity needs a link-task model")?;
    let n = cache.output.rows();
    if i >= n || j >= n {
        return Err(Error::Index {
            what: "output entry",
            index: (i, j),
            bounds: (n, n),
        });
    }
    // Ŷ is symmetric, so both orders share one evaluation.
    let (a, b) = canonical(i, j);
    let value = Calculus::new(model, cache, Variable::Features)?.link_output_entry_deriv(a, b)?;
    Ok(SensitivityMap {
        subject: SensitivitySubject::OutputEntry(i, j),
        value,
    })
}

/// `∂H_r/∂W_s` (or `∂H_rᵀ/∂W_s` when `transposed`) as a block derivative,
/// for `1 ≤ s ≤ r ≤ d`.
pub fn layer_jacobian(
    model: &GcnModel,
    cache: &ForwardCache,
    r: usize,
    s: usize,
    transposed: bool,
) -> Result<BlockDerivative> {
    let d = model.depth();
    if r > d {
        return Err(Error::Layer { layer: r, depth: d });
    }
    let mut calc = Calculus::new(model, cache, Variable::Weight(s))?;
    let payload = calc.hidden_chain(r, transposed)?;
    let h = cache.h(r).shape();
    let inner = if transposed { (h.1, h.0) } else { h };
    BlockDerivative::new((calc.p, calc.q), inner, payload)
}

/// `∂H_r/∂H_0` (or its transposed variant) for `1 ≤ r ≤ d`.
pub fn feature_jacobian(model: &GcnModel, cache: &ForwardCache, r: usize, transposed: bool) -> Result<BlockDerivative> {
    let d = model.depth();
    if r == 0 || r > d {
        return Err(Error::Layer { layer: r, depth: d });
    }
    let mut calc = Calculus::new(model, cache, Variable::Features)?;
    let payload = calc.hidden_chain(r, transposed)?;
    let h = cache.h(r).shape();
    let inner = if transposed { (h.1, h.0) } else { h };
    BlockDerivative::new((calc.p, calc.q), inner, payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::{forward, forward_with, Propagation};
    use crate::graph::{ddi_fixture, karate_fixture};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_residual_gives_zero_gradient() {
        // One node, identity activations: ŷ = h·w, so choose w to hit the label.
        let model = GcnModel::new(
            Task::Node,
            Propagation::Adjacency,
            vec![Matrix::filled(1, 1, 1.0)],
            vec![Activation::Identity, Activation::Identity],
        )
        .unwrap();
        let cache = forward_with(&model, Matrix::identity(1), Matrix::filled(1, 1, 1.0)).unwrap();
        let labels = Matrix::filled(1, 1, 1.0);
        let req = GradRequest {
            model: &model,
            cache: &cache,
            targets: Targets::Node { labels: &labels },
            layer: 1,
        };
        assert_eq!(node_weight_grad(&req).unwrap(), Matrix::zeros(1, 1));
        let sens = node_input_sensitivity(&model, &cache, &labels).unwrap();
        assert_eq!(sens.value, Matrix::zeros(1, 1));
    }

    #[test]
    fn empty_edge_sets_give_zero_gradient() {
        let g = ddi_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GcnModel::glorot(
            Task::Link,
            Propagation::Normalized,
            &[20, 10, 5],
            vec![Activation::Relu, Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let cache = forward(&model, &g).unwrap();
        let grads = weight_grads(&model, &cache, Targets::Link { positives: &[], negatives: &[] }).unwrap();
        assert_eq!(grads[0], Matrix::zeros(20, 10));
        assert_eq!(grads[1], Matrix::zeros(10, 5));
    }

    #[test]
    fn errors_for_bad_requests() {
        let g = karate_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = GcnModel::glorot(
            Task::Node,
            Propagation::Adjacency,
            &[34, 1],
            vec![Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let cache = forward(&model, &g).unwrap();
        let labels = g.labels().unwrap();
        let mut req = GradRequest {
            model: &model,
            cache: &cache,
            targets: Targets::Node { labels },
            layer: 2,
        };
        assert!(matches!(node_weight_grad(&req), Err(Error::Layer { .. })));
        req.layer = 0;
        assert!(matches!(node_weight_grad(&req), Err(Error::Layer { .. })));

        let moved = model.with_weights(vec![model.weight(1).scale(2.0)]).unwrap();
        let stale = GradRequest {
            model: &moved,
            cache: &cache,
            targets: Targets::Node { labels },
            layer: 1,
        };
        assert_eq!(node_weight_grad(&stale), Err(Error::StaleCache));
        assert!(matches!(link_weight_grad(&stale), Err(Error::Task(_))));
    }

    #[test]
    fn overlapping_edge_sets_rejected() {
        let g = ddi_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = GcnModel::glorot(
            Task::Link,
            Propagation::Normalized,
            &[20, 4],
            vec![Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let cache = forward(&model, &g).unwrap();
        let r = weight_grads(&model, &cache, Targets::Link { positives: &[(0, 6)], negatives: &[(6, 0)] });
        assert_eq!(r, Err(Error::EdgeOverlap(6, 0)));
        assert!(link_output_sensitivity(&model, &cache, 10, 0).is_err());
    }

    #[test]
    fn gradient_shapes_match_weights() {
        let g = ddi_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = GcnModel::glorot(
            Task::Link,
            Propagation::Normalized,
            &[20, 3, 4, 2],
            vec![Activation::Silu, Activation::elu(), Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let cache = forward(&model, &g).unwrap();
        let grads = weight_grads(
            &model,
            &cache,
            Targets::Link {
                positives: g.edges(),
                negatives: &[(0, 1), (2, 9)],
            },
        )
        .unwrap();
        for (w, gw) in model.weights().iter().zip(&grads) {
            assert_eq!(w.shape(), gw.shape());
        }
    }

    #[test]
    fn identity_base_case_jacobian_structure() {
        let g = ddi_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = GcnModel::glorot(
            Task::Link,
            Propagation::Normalized,
            &[20, 3, 2],
            vec![Activation::Identity, Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let cache = forward(&model, &g).unwrap();
        let jac = layer_jacobian(&model, &cache, 1, 1, false).unwrap();
        let expected = Matrix::identity(20).kron(cache.ph(1)).matmul(&related_ubar(20, 3)).unwrap();
        assert_eq!(jac.payload(), &expected);
        assert!(matches!(layer_jacobian(&model, &cache, 1, 2, false), Err(Error::Layer { .. })));
    }
}
