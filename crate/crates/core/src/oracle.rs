//! Reference gradients: central finite differences and a small reverse-mode
//! tape, plus the SSE comparator used to score one method against another.

use alloc::vec;
use alloc::vec::Vec;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::gcn::{clamp_prob, GcnModel, Task};
use crate::graph::Graph;
use crate::matgrad::Targets;
use crate::matrix::Matrix;

pub const FD_STEP: f64 = 1e-6;

/// Result of [`fd_grad`]. Entries whose perturbed evaluations were not
/// finite hold NaN and are listed in `non_finite`.
#[derive(Clone, Debug, PartialEq)]
pub struct FdGrad {
    pub value: Matrix,
    pub non_finite: Vec<(usize, usize)>,
}

impl FdGrad {
    pub fn is_clean(&self) -> bool {
        self.non_finite.is_empty()
    }
}

/// Central differences `(f(x + h·E_ij) − f(x − h·E_ij)) / 2h` for every entry.
pub fn fd_grad(mut f: impl FnMut(&Matrix) -> f64, at: &Matrix, h: f64) -> Result<FdGrad> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(alloc::format!("finite-difference step must be positive, got {h}")));
    }
    let (rows, cols) = at.shape();
    let mut value = Matrix::zeros(rows, cols);
    let mut non_finite = Vec::new();
    let mut probe = at.clone();
    for i in 0..rows {
        for j in 0..cols {
            let x = at.get(i, j);
            probe.set(i, j, x + h);
            let up = f(&probe);
            probe.set(i, j, x - h);
            let down = f(&probe);
            probe.set(i, j, x);
            let g = (up - down) / (2.0 * h);
            if g.is_finite() {
                value.set(i, j, g);
            } else {
                value.set(i, j, f64::NAN);
                non_finite.push((i, j));
            }
        }
    }
    Ok(FdGrad { value, non_finite })
}

/// Central differences where the numerator `f(x + h·E_ij) − f(x − h·E_ij)`
/// is supplied directly by `diff(plus, minus)`, for callers that can
/// evaluate it without cancellation.
pub fn fd_grad_diff(mut diff: impl FnMut(&Matrix, &Matrix) -> f64, at: &Matrix, h: f64) -> Result<FdGrad> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(alloc::format!("finite-difference step must be positive, got {h}")));
    }
    let (rows, cols) = at.shape();
    let mut value = Matrix::zeros(rows, cols);
    let mut non_finite = Vec::new();
    let mut plus = at.clone();
    let mut minus = at.clone();
    for i in 0..rows {
        for j in 0..cols {
            let x = at.get(i, j);
            plus.set(i, j, x + h);
            minus.set(i, j, x - h);
            let g = diff(&plus, &minus) / (2.0 * h);
            plus.set(i, j, x);
            minus.set(i, j, x);
            if g.is_finite() {
                value.set(i, j, g);
            } else {
                value.set(i, j, f64::NAN);
                non_finite.push((i, j));
            }
        }
    }
    Ok(FdGrad { value, non_finite })
}

/// The matrix a finite-difference check perturbs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdVariable {
    /// `W_s`, 1-based.
    Weight(usize),
    Features,
}

fn perturbed_forward(
    model: &GcnModel,
    propagation: &Matrix,
    features: &Matrix,
    var: FdVariable,
    value: &Matrix,
) -> Result<crate::gcn::ForwardCache> {
    match var {
        FdVariable::Weight(s) => {
            let mut ws = model.weights().to_vec();
            ws[s - 1] = value.clone();
            crate::gcn::forward_with(&model.with_weights(ws)?, propagation.clone(), features.clone())
        }
        FdVariable::Features => crate::gcn::forward_with(model, propagation.clone(), value.clone()),
    }
}

fn fd_point(model: &GcnModel, features: &Matrix, var: FdVariable) -> Result<Matrix> {
    match var {
        FdVariable::Weight(s) if s >= 1 && s <= model.depth() => Ok(model.weight(s).clone()),
        FdVariable::Weight(s) => Err(Error::Layer {
            layer: s,
            depth: model.depth(),
        }),
        FdVariable::Features => Ok(features.clone()),
    }
}

/// `softplus(a) − softplus(b)` without forming either term.
fn softplus_diff(a: f64, b: f64) -> f64 {
    let sb = if b >= 0.0 {
        1.0 / (1.0 + libm::exp(-b))
    } else {
        let e = libm::exp(b);
        e / (1.0 + e)
    };
    libm::log1p(sb * libm::expm1(a - b))
}

/// `σ(a) − σ(b)` without forming either term.
fn sigmoid_diff(a: f64, b: f64) -> f64 {
    let sa = Activation::Sigmoid.eval(a);
    let sb = Activation::Sigmoid.eval(b);
    -sa * (1.0 - sb) * libm::expm1(b - a)
}

/// `ℓ(plus) − ℓ(minus)` for one cross-entropy term with target `y`, given
/// readouts `g` and outputs `ŷ` of both evaluations. With a sigmoid output
/// `ℓ = softplus(∓g)`, which is differenced directly; otherwise (or when the
/// clamp is active) the clamped log terms are subtracted.
fn bce_term_diff(sigmoid_out: bool, y: f64, g: (f64, f64), p: (f64, f64)) -> f64 {
    let unclamped = clamp_prob(p.0) == p.0 && clamp_prob(p.1) == p.1;
    if sigmoid_out && unclamped && (y == 0.0 || y == 1.0) {
        if y == 1.0 {
            softplus_diff(-g.0, -g.1)
        } else {
            softplus_diff(g.0, g.1)
        }
    } else {
        let l = |q: f64| {
            let c = clamp_prob(q);
            -(y * libm::log(c) + (1.0 - y) * libm::log(1.0 - c))
        };
        l(p.0) - l(p.1)
    }
}

/// Central-difference `∂L/∂X` for the loss selected by `targets`.
pub fn fd_loss_grad(
    model: &GcnModel,
    propagation: &Matrix,
    features: &Matrix,
    targets: Targets<'_>,
    var: FdVariable,
    h: f64,
) -> Result<FdGrad> {
    let at = fd_point(model, features, var)?;
    let sigmoid_out = model.activation(model.depth() + 1) == Activation::Sigmoid;
    let mut failure = None;
    let grad = fd_grad_diff(
        |plus, minus| {
            let eval = || -> Result<f64> {
                let a = perturbed_forward(model, propagation, features, var, plus)?;
                let b = perturbed_forward(model, propagation, features, var, minus)?;
                let term = |y: f64, i: usize, j: usize| -> Result<f64> {
                    Ok(bce_term_diff(
                        sigmoid_out,
                        y,
                        (a.readout.try_get(i, j)?, b.readout.try_get(i, j)?),
                        (a.output.try_get(i, j)?, b.output.try_get(i, j)?),
                    ))
                };
                let mut total = 0.0;
                match (model.task(), targets) {
                    (Task::Node, Targets::Node { labels }) => {
                        if labels.shape() != a.output.shape() {
                            return Err(Error::Dimension {
                                op: "node labels",
                                left: a.output.shape(),
                                right: labels.shape(),
                            });
                        }
                        for i in 0..labels.rows() {
                            for j in 0..labels.cols() {
                                total += term(labels.get(i, j), i, j)?;
                            }
                        }
                    }
                    (Task::Link, Targets::Link { positives, negatives }) => {
                        for &(i, j) in positives {
                            total += term(1.0, i, j)?;
                        }
                        for &(i, j) in negatives {
                            total += term(0.0, i, j)?;
                        }
                    }
                    _ => return Err(Error::Task("targets do not match the model task")),
                }
                Ok(total)
            };
            eval().unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        &at,
        h,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(grad),
    }
}

/// Central-difference `∂ŷ_ij/∂X`.
pub fn fd_output_grad(
    model: &GcnModel,
    propagation: &Matrix,
    features: &Matrix,
    entry: (usize, usize),
    var: FdVariable,
    h: f64,
) -> Result<FdGrad> {
    let at = fd_point(model, features, var)?;
    let (i, j) = entry;
    let sigmoid_out = model.activation(model.depth() + 1) == Activation::Sigmoid;
    let mut failure = None;
    let grad = fd_grad_diff(
        |plus, minus| {
            let eval = || -> Result<f64> {
                let a = perturbed_forward(model, propagation, features, var, plus)?;
                let b = perturbed_forward(model, propagation, features, var, minus)?;
                if sigmoid_out {
                    Ok(sigmoid_diff(a.readout.try_get(i, j)?, b.readout.try_get(i, j)?))
                } else {
                    Ok(a.output.try_get(i, j)? - b.output.try_get(i, j)?)
                }
            };
            eval().unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        &at,
        h,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(grad),
    }
}

/// Central-difference block derivative of a matrix-valued `f` at the
/// `p×q` point `at`: block `(i, j)` approximates `∂f/∂x_ij`.
pub fn fd_block_derivative(
    mut f: impl FnMut(&Matrix) -> Matrix,
    at: &Matrix,
    h: f64,
) -> Result<crate::matrix::BlockDerivative> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(alloc::format!("finite-difference step must be positive, got {h}")));
    }
    let inner = f(at).shape();
    let mut probe = at.clone();
    crate::matrix::BlockDerivative::from_blocks(at.shape(), inner, |i, j| {
        let x = at.get(i, j);
        probe.set(i, j, x + h);
        let up = f(&probe);
        probe.set(i, j, x - h);
        let down = f(&probe);
        probe.set(i, j, x);
        // A shape change under perturbation surfaces as a from_blocks error.
        up.sub(&down).map_or_else(|_| Matrix::zeros(0, 0), |d| d.scale(0.5 / h))
    })
}

/// `Σ_ij (a_ij − b_ij)²`.
pub fn sse(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            op: "sse",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`, zero when both vanish.
pub fn relative_error(a: &Matrix, b: &Matrix) -> Result<f64> {
    let diff = sse(a, b)?;
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    if scale == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(libm::sqrt(diff) / scale)
}

/// One line of a method comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSse {
    pub layer: usize,
    pub sse: f64,
}

impl LayerSse {
    pub fn log10_sse(&self) -> f64 {
        libm::log10(self.sse)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SseReport {
    pub iteration: usize,
    pub layers: Vec<LayerSse>,
    pub ms_closed_form: f64,
    pub ms_tape: f64,
}

impl SseReport {
    pub fn compare(iteration: usize, a: &[Matrix], b: &[Matrix]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Model(alloc::format!("comparing {} matrices against {}", a.len(), b.len())));
        }
        let layers = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(k, (x, y))| Ok(LayerSse { layer: k + 1, sse: sse(x, y)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            iteration,
            layers,
            ms_closed_form: 0.0,
            ms_tape: 0.0,
        })
    }

    pub fn max_sse(&self) -> f64 {
        self.layers.iter().map(|l| l.sse).fold(0.0, f64::max)
    }
}

pub type Var = usize;

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Act(Var, Activation),
    Transpose(Var),
    /// `a·aᵀ`.
    Gram(Var),
    /// Column vector of the listed entries.
    Gather(Var, Vec<(usize, usize)>),
    /// Summed binary cross-entropy of a prediction against fixed targets.
    Bce(Var, Matrix),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Matrix,
}

/// Arithmetic used by a [`Tape`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Double,
    /// Values and adjoints stored as `f32`, products accumulated in `f32`,
    /// element-wise functions correctly rounded to `f32`.
    Single,
}

impl Precision {
    pub fn name(&self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Single => "single",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "double" | "f64" => Ok(Precision::Double),
            "single" | "f32" => Ok(Precision::Single),
            other => Err(Error::Config(alloc::format!("unknown precision {other:?}"))),
        }
    }

    /// Rounds to the storage format.
    pub fn store(&self, m: Matrix) -> Matrix {
        match self {
            Precision::Double => m,
            Precision::Single => m.round_to_f32(),
        }
    }

    fn matmul(&self, a: &Matrix, b: &Matrix) -> Result<Matrix> {
        match self {
            Precision::Double => a.matmul(b),
            Precision::Single => a.matmul_f32(b),
        }
    }
}

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so every input precedes its consumers.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    precision: Precision,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_precision(precision: Precision) -> Self {
        Self {
            nodes: Vec::new(),
            precision,
        }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v].value
    }

    fn push(&mut self, op: Op, value: Matrix) -> Var {
        let value = self.precision.store(value);
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.precision.matmul(self.value(a), self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn activation(&mut self, a: Var, act: Activation) -> Var {
        let value = act.apply(self.value(a));
        self.push(Op::Act(a, act), value)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(Op::Transpose(a), value)
    }

    pub fn gram(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let value = self.precision.matmul(x, &x.transpose())?;
        Ok(self.push(Op::Gram(a), value))
    }

    pub fn gather(&mut self, a: Var, entries: &[(usize, usize)]) -> Result<Var> {
        let x = self.value(a);
        let mut data = Vec::with_capacity(entries.len());
        for &(i, j) in entries {
            data.push(x.try_get(i, j)?);
        }
        let value = Matrix::from_vec(entries.len(), 1, data)?;
        Ok(self.push(Op::Gather(a, entries.to_vec()), value))
    }

    /// `−Σ (y ln ŷ + (1 − y) ln(1 − ŷ))` with `ŷ` clamped to `[ε, 1 − ε]`.
    pub fn bce(&mut self, pred: Var, targets: Matrix) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != targets.shape() {
            return Err(Error::Dimension {
                op: "bce",
                left: p.shape(),
                right: targets.shape(),
            });
        }
        let mut loss = 0.0;
        for (&t, &y) in targets.as_slice().iter().zip(p.as_slice()) {
            let c = clamp_prob(y);
            loss -= t * libm::log(c) + (1.0 - t) * libm::log(1.0 - c);
        }
        Ok(self.push(Op::Bce(pred, targets), Matrix::filled(1, 1, loss)))
    }

    /// Adjoints of every node for the seed `∂out/∂root = seed`. The clamp in
    /// `bce` is treated as the identity.
    pub fn backward(&self, root: Var, seed: Matrix) -> Result<Vec<Option<Matrix>>> {
        if seed.shape() != self.value(root).shape() {
            return Err(Error::Dimension {
                op: "backward seed",
                left: self.value(root).shape(),
                right: seed.shape(),
            });
        }
        let pr = self.precision;
        let mut adj: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        adj[root] = Some(pr.store(seed));
        for v in (0..=root).rev() {
            let Some(g) = adj[v].take() else { continue };
            match &self.nodes[v].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = pr.matmul(&g, &self.value(*b).transpose())?;
                    let gb = pr.matmul(&self.value(*a).transpose(), &g)?;
                    accumulate(&mut adj, *a, ga, pr)?;
                    accumulate(&mut adj, *b, gb, pr)?;
                }
                Op::Act(a, act) => {
                    let ga = g.hadamard(&pr.store(act.apply_deriv(self.value(*a))))?;
                    accumulate(&mut adj, *a, pr.store(ga), pr)?;
                }
                Op::Transpose(a) => accumulate(&mut adj, *a, g.transpose(), pr)?,
                Op::Gram(a) => {
                    let sym = pr.store(g.add(&g.transpose())?);
                    accumulate(&mut adj, *a, pr.matmul(&sym, self.value(*a))?, pr)?;
                }
                Op::Gather(a, entries) => {
                    let (r, c) = self.value(*a).shape();
                    let mut ga = Matrix::zeros(r, c);
                    for (k, &(i, j)) in entries.iter().enumerate() {
                        ga.set(i, j, ga.get(i, j) + g.get(k, 0));
                    }
                    accumulate(&mut adj, *a, pr.store(ga), pr)?;
                }
                Op::Bce(pred, targets) => {
                    let up = g.get(0, 0);
                    let p = self.value(*pred);
                    let ga = Matrix::from_fn(p.rows(), p.cols(), |i, j| {
                        let y = targets.get(i, j);
                        let c = clamp_prob(p.get(i, j));
                        up * (-y / c + (1.0 - y) / (1.0 - c))
                    });
                    accumulate(&mut adj, *pred, pr.store(ga), pr)?;
                }
            }
            adj[v] = Some(g);
        }
        Ok(adj)
    }
}

fn accumulate(adj: &mut [Option<Matrix>], v: Var, g: Matrix, pr: Precision) -> Result<()> {
    match &mut adj[v] {
        Some(existing) => {
            existing.axpy(1.0, &g)?;
            *existing = pr.store(core::mem::replace(existing, Matrix::zeros(0, 0)));
            Ok(())
        }
        slot => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// The GCN forward pass recorded on a tape.
pub struct TapeForward {
    pub tape: Tape,
    pub features: Var,
    pub weights: Vec<Var>,
    pub output: Var,
}

pub fn record_forward(model: &GcnModel, propagation: &Matrix, features: &Matrix) -> Result<TapeForward> {
    record_forward_in(model, propagation, features, Precision::Double)
}

pub fn record_forward_in(
    model: &GcnModel,
    propagation: &Matrix,
    features: &Matrix,
    precision: Precision,
) -> Result<TapeForward> {
    let mut tape = Tape::with_precision(precision);
    let p = tape.leaf(propagation.clone());
    let h0 = tape.leaf(features.clone());
    let weights: Vec<Var> = model.weights().iter().map(|w| tape.leaf(w.clone())).collect();
    let mut h = h0;
    for (s, &w) in weights.iter().enumerate() {
        let ph = tape.matmul(p, h)?;
        let z = tape.matmul(ph, w)?;
        h = tape.activation(z, model.activation(s + 1));
    }
    let readout = match model.task() {
        Task::Node => h,
        Task::Link => tape.gram(h)?,
    };
    let output = tape.activation(readout, model.activation(model.depth() + 1));
    Ok(TapeForward {
        tape,
        features: h0,
        weights,
        output,
    })
}

/// Gradients from the tape. `nan_flagged` marks a non-finite forward pass or
/// loss; the gradients are still returned as computed.
#[derive(Clone, Debug, PartialEq)]
pub struct TapeGrad {
    pub weights: Vec<Matrix>,
    pub features: Matrix,
    pub loss: f64,
    pub output: Matrix,
    pub nan_flagged: bool,
}

pub fn tape_grad(model: &GcnModel, graph: &Graph, targets: Targets<'_>) -> Result<TapeGrad> {
    tape_grad_with(model, &model.propagation().matrix(graph), graph.features(), targets)
}

pub fn tape_grad_with(model: &GcnModel, propagation: &Matrix, features: &Matrix, targets: Targets<'_>) -> Result<TapeGrad> {
    tape_grad_in(model, propagation, features, targets, Precision::Double)
}

pub fn tape_grad_in(
    model: &GcnModel,
    propagation: &Matrix,
    features: &Matrix,
    targets: Targets<'_>,
    precision: Precision,
) -> Result<TapeGrad> {
    let mut rec = record_forward_in(model, propagation, features, precision)?;
    let loss = match (model.task(), targets) {
        (Task::Node, Targets::Node { labels }) => rec.tape.bce(rec.output, labels.clone())?,
        (Task::Link, Targets::Link { positives, negatives }) => {
            let mut entries = positives.to_vec();
            entries.extend_from_slice(negatives);
            let mut y = vec![1.0; positives.len()];
            y.resize(entries.len(), 0.0);
            let picked = rec.tape.gather(rec.output, &entries)?;
            rec.tape.bce(picked, Matrix::from_vec(entries.len(), 1, y)?)?
        }
        _ => return Err(Error::Task("targets do not match the model task")),
    };
    let loss_value = rec.tape.value(loss).get(0, 0);
    let output = rec.tape.value(rec.output).clone();
    let nan_flagged = !loss_value.is_finite() || !output.is_finite();
    let adj = rec.tape.backward(loss, Matrix::filled(1, 1, 1.0))?;
    let grad_of = |v: Var| adj[v].clone().unwrap_or_else(|| Matrix::zeros(rec.tape.value(v).rows(), rec.tape.value(v).cols()));
    Ok(TapeGrad {
        weights: rec.weights.iter().map(|&w| grad_of(w)).collect(),
        features: grad_of(rec.features),
        loss: loss_value,
        output,
        nan_flagged,
    })
}

/// `∂ŷ_ij/∂H_0` from the tape.
pub fn tape_output_sensitivity(
    model: &GcnModel,
    propagation: &Matrix,
    features: &Matrix,
    i: usize,
    j: usize,
) -> Result<Matrix> {
    let rec = record_forward(model, propagation, features)?;
    let (r, c) = rec.tape.value(rec.output).shape();
    if i >= r || j >= c {
        return Err(Error::Index {
            what: "output entry",
            index: (i, j),
            bounds: (r, c),
        });
    }
    let mut seed = Matrix::zeros(r, c);
    seed.set(i, j, 1.0);
    let adj = rec.tape.backward(rec.output, seed)?;
    Ok(adj[rec.features].clone().unwrap_or_else(|| Matrix::zeros(features.rows(), features.cols())))
}

/// Closed form against the tape and against finite differences, one
/// weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerCheck {
    pub layer: usize,
    pub sse_tape: f64,
    pub rel_fd: f64,
    pub fd_non_finite: usize,
}

/// Scores `closed` (one gradient per weight matrix) against the tape and
/// the finite-difference oracle at the current weights.
pub fn gradient_triangle(
    model: &GcnModel,
    graph: &Graph,
    targets: Targets<'_>,
    closed: &[Matrix],
    h: f64,
) -> Result<Vec<LayerCheck>> {
    if closed.len() != model.depth() {
        return Err(Error::Model(alloc::format!(
            "{} gradients for a {}-layer model",
            closed.len(),
            model.depth()
        )));
    }
    let propagation = model.propagation().matrix(graph);
    let tape = tape_grad_with(model, &propagation, graph.features(), targets)?;
    closed
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let fd = fd_loss_grad(model, &propagation, graph.features(), targets, FdVariable::Weight(k + 1), h)?;
            Ok(LayerCheck {
                layer: k + 1,
                sse_tape: sse(g, &tape.weights[k])?,
                rel_fd: relative_error(g, &fd.value)?,
                fd_non_finite: fd.non_finite.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::{forward, link_loss, node_loss, Propagation};
    use crate::graph::{ddi_fixture, karate_fixture};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fd_of_frobenius_square_is_twice_the_point() {
        let m = Matrix::from_fn(3, 4, |i, j| i as f64 * 0.5 - j as f64 * 0.25 + 0.1);
        let g = fd_grad(|x| x.as_slice().iter().map(|v| v * v).sum(), &m, FD_STEP).unwrap();
        assert!(g.is_clean());
        for (a, b) in g.value.as_slice().iter().zip(m.scale(2.0).as_slice()) {
            assert!((a - b).abs() <= 1e-8);
        }
        let z = fd_grad(|_| 3.0, &m, FD_STEP).unwrap();
        assert_eq!(z.value, Matrix::zeros(3, 4));
    }

    #[test]
    fn fd_flags_non_finite_entries() {
        let m = Matrix::from_rows(&[[1.0, 1e-7]]).unwrap();
        let g = fd_grad(|x| libm::log(x.get(0, 1)), &m, FD_STEP).unwrap();
        assert_eq!(g.non_finite, vec![(0, 1)]);
        assert!(g.value.get(0, 1).is_nan());
        assert!(fd_grad(|_| 0.0, &m, 0.0).is_err());
    }

    #[test]
    fn cancellation_free_differences() {
        let sp = |v: f64| libm::log1p(libm::exp(v));
        for (a, b) in [(0.3, 0.2999), (-2.0, -2.5), (5.0, 4.0), (-30.0, -29.0)] {
            assert!((softplus_diff(a, b) - (sp(a) - sp(b))).abs() <= 1e-14);
            let s = |v: f64| Activation::Sigmoid.eval(v);
            assert!((sigmoid_diff(a, b) - (s(a) - s(b))).abs() <= 1e-14);
        }
        assert_eq!(softplus_diff(1.5, 1.5), 0.0);
    }

    #[test]
    fn sse_examples() {
        let a = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(sse(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.set(0, 0, a.get(0, 0) + 1.0);
        assert_eq!(sse(&a, &b).unwrap(), 1.0);
        assert!(sse(&a, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn single_matmul_sum_gradient() {
        // f(X) = sum(X·B) ⇒ ∂f/∂X = 1·Bᵀ.
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::from_fn(2, 3, |i, j| (i + j) as f64));
        let b = tape.leaf(Matrix::from_fn(3, 4, |i, j| i as f64 - j as f64));
        let y = tape.matmul(x, b).unwrap();
        let adj = tape.backward(y, Matrix::ones(2, 4)).unwrap();
        let expected = Matrix::ones(2, 4).matmul(&tape.value(b).transpose()).unwrap();
        assert_eq!(adj[x].as_ref().unwrap(), &expected);
    }

    #[test]
    fn tape_forward_matches_cache_bitwise() {
        let g = ddi_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = GcnModel::glorot(
            Task::Link,
            Propagation::Normalized,
            &[20, 10, 5],
            vec![Activation::Relu, Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let cache = forward(&model, &g).unwrap();
        let rec = record_forward(&model, &cache.propagation, g.features()).unwrap();
        assert_eq!(rec.tape.value(rec.output), &cache.output);
        let pos = g.edges();
        let neg = [(0usize, 1usize), (8, 2)];
        let tg = tape_grad(&model, &g, Targets::Link { positives: pos, negatives: &neg }).unwrap();
        assert_eq!(tg.loss, link_loss(&cache.output, pos, &neg).unwrap().value);
        assert!(!tg.nan_flagged);
    }

    #[test]
    fn tape_matches_fd_on_karate() {
        let g = karate_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = GcnModel::glorot(
            Task::Node,
            Propagation::Adjacency,
            &[34, 1],
            vec![Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let labels = g.labels().unwrap();
        let tg = tape_grad(&model, &g, Targets::Node { labels }).unwrap();
        let fd = fd_grad(
            |w| {
                let m = model.with_weights(vec![w.clone()]).unwrap();
                node_loss(labels, &forward(&m, &g).unwrap().output).unwrap().value
            },
            model.weight(1),
            FD_STEP,
        )
        .unwrap();
        assert!(relative_error(&tg.weights[0], &fd.value).unwrap() <= 1e-6);
    }

    #[test]
    fn mismatched_targets_rejected() {
        let g = karate_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = GcnModel::glorot(
            Task::Node,
            Propagation::Adjacency,
            &[34, 1],
            vec![Activation::Identity, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let r = tape_grad(&model, &g, Targets::Link { positives: &[], negatives: &[] });
        assert!(matches!(r, Err(Error::Task(_))));
    }
}
