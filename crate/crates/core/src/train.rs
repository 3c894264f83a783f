//! SGD training, paired closed-form/tape runs and restart studies.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::gcn::{accuracy, clamp_prob, forward, glorot_weights, link_loss, node_loss, predictions, validate_architecture};
use crate::gcn::{ForwardCache, GcnModel, Propagation, Task};
use crate::graph::{Graph, NegativeSample};
use crate::matgrad::{link_input_sensitivity, node_input_sensitivity, weight_grads, Targets};
use crate::matrix::Matrix;
use crate::oracle::{sse, tape_grad_in, Precision};
use crate::stats::{box_summary, BoxSummary};

/// Smallest allowed `|z|` for pre-activations feeding a kinked activation
/// when drawing weights for gradient checks.
pub const KINK_MARGIN: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradMethod {
    ClosedForm,
    Tape,
    Paired,
}

impl GradMethod {
    pub fn name(&self) -> &'static str {
        match self {
            GradMethod::ClosedForm => "closed",
            GradMethod::Tape => "tape",
            GradMethod::Paired => "paired",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "closed" | "closed_form" => Ok(GradMethod::ClosedForm),
            "tape" => Ok(GradMethod::Tape),
            "paired" | "both" => Ok(GradMethod::Paired),
            other => Err(Error::Config(format!("unknown gradient method {other:?}"))),
        }
    }

    fn closed(&self) -> bool {
        !matches!(self, GradMethod::Tape)
    }

    fn tape(&self) -> bool {
        !matches!(self, GradMethod::ClosedForm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub task: Task,
    pub propagation: Propagation,
    /// `n_0 … n_d`.
    pub dims: Vec<usize>,
    /// `Σ_1 … Σ_{d+1}`.
    pub activations: Vec<Activation>,
}

impl ModelSpec {
    pub fn depth(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        validate_architecture(self.task, &self.dims, &self.activations)
    }

    pub fn build(&self, weights: Vec<Matrix>) -> Result<GcnModel> {
        GcnModel::new(self.task, self.propagation, weights, self.activations.clone())
    }

    pub fn init(&self, seed: u64) -> Result<GcnModel> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.build(glorot_weights(&self.dims, &mut rng))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Negative pairs drawn per iteration (link task).
    pub negatives: usize,
    pub restarts: usize,
    pub method: GradMethod,
    /// Record `Σ|∂L/∂H_0|` at every iteration.
    pub track_sensitivity: bool,
    /// Overrides the seeded initialization.
    pub initial_weights: Option<Vec<Matrix>>,
    /// Arithmetic of the tape baseline. With [`Precision::Single`] the shared
    /// initialization is rounded to `f32` and the tape's weights are stored
    /// as `f32` after every update.
    pub baseline_precision: Precision,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn initial_model(&self) -> Result<GcnModel> {
        let model = match &self.initial_weights {
            Some(w) => self.model.build(w.clone())?,
            None => self.model.init(self.seed)?,
        };
        match self.baseline_precision {
            Precision::Double => Ok(model),
            p => {
                let rounded = model.weights().iter().map(|w| p.store(w.clone())).collect();
                model.with_weights(rounded)
            }
        }
    }
}

/// `W_s ← W_s − lr·∂L/∂W_s`.
pub fn sgd_step(weights: &[Matrix], grads: &[Matrix], lr: f64) -> Result<Vec<Matrix>> {
    if weights.len() != grads.len() {
        return Err(Error::Model(format!(
            "{} weight matrices but {} gradients",
            weights.len(),
            grads.len()
        )));
    }
    weights
        .iter()
        .zip(grads)
        .map(|(w, g)| {
            let mut next = w.clone();
            next.axpy(-lr, g)?;
            Ok(next)
        })
        .collect()
}

/// One row of a [`TrainLog`]. Losses and accuracies are evaluated before the
/// update of that iteration; `sse` compares the weights after it.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loss_closed: Option<f64>,
    pub loss_tape: Option<f64>,
    pub acc_closed: Option<f64>,
    pub acc_tape: Option<f64>,
    pub predictions_match: Option<bool>,
    pub sse: Vec<f64>,
    pub sensitivity_abs_sum: Option<f64>,
    pub ms_closed_form: f64,
    pub ms_tape: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub task: Task,
    pub method: GradMethod,
    pub initial_weights: Vec<Matrix>,
    pub records: Vec<IterationRecord>,
    pub negatives: Vec<NegativeSample>,
    pub final_closed: Option<Vec<Matrix>>,
    pub final_tape: Option<Vec<Matrix>>,
}

impl TrainLog {
    pub fn depth(&self) -> usize {
        self.initial_weights.len()
    }

    /// Closed-form weights when available, otherwise the tape's.
    pub fn final_weights(&self) -> &[Matrix] {
        self.final_closed
            .as_deref()
            .or(self.final_tape.as_deref())
            .unwrap_or(&self.initial_weights)
    }

    /// Per-layer SSE between the two methods' weights after the last update.
    pub fn final_sse(&self) -> Option<&[f64]> {
        self.records.last().filter(|r| !r.sse.is_empty()).map(|r| r.sse.as_slice())
    }

    pub fn max_sse(&self) -> f64 {
        self.records.iter().flat_map(|r| r.sse.iter().copied()).fold(0.0, f64::max)
    }

    pub fn sensitivity_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.sensitivity_abs_sum).collect()
    }
}

/// Seed for the negative sample of `iteration`.
pub fn iteration_seed(seed: u64, iteration: usize) -> u64 {
    splitmix64(seed ^ splitmix64(0x6e65_6761_7469_7665 ^ iteration as u64))
}

/// Seed for restart `index` of a study with base `seed`.
pub fn restart_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index as u64 + 1)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A monotonically increasing millisecond clock. The core crate has no time
/// source of its own, so untimed runs use [`no_clock`].
pub type Clock<'a> = &'a dyn Fn() -> f64;

pub fn no_clock() -> f64 {
    0.0
}

struct Step {
    loss: f64,
    acc: Option<f64>,
    preds: Vec<bool>,
    grads: Vec<Matrix>,
    sensitivity: Option<f64>,
    ms: f64,
}

enum Supervision<'a> {
    Node(&'a Matrix),
    Link(&'a [(usize, usize)]),
}

fn closed_step(
    model: &GcnModel,
    graph: &Graph,
    sup: &Supervision<'_>,
    negatives: &[(usize, usize)],
    track: bool,
    iteration: usize,
    clock: Clock<'_>,
) -> Result<Step> {
    let t0 = clock();
    let cache: ForwardCache = forward(model, graph)?;
    let (loss, targets, acc) = match *sup {
        Supervision::Node(labels) => (
            node_loss(labels, &cache.output)?,
            Targets::Node { labels },
            Some(accuracy(labels, &cache.output)?),
        ),
        Supervision::Link(positives) => (
            link_loss(&cache.output, positives, negatives)?,
            Targets::Link { positives, negatives },
            None,
        ),
    };
    // A run counts as NaN when the loss without the probability clamp is
    // not finite, i.e. some output saturated to exactly 0 or 1.
    if loss.is_nan_flagged() || !loss.value.is_finite() {
        return Err(Error::NanLoss { iteration });
    }
    let grads = weight_grads(model, &cache, targets)?;
    let ms = clock() - t0;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NanLoss { iteration });
    }
    let sensitivity = if track {
        let map = match targets {
            Targets::Node { labels } => node_input_sensitivity(model, &cache, labels)?,
            Targets::Link { positives, negatives } => link_input_sensitivity(model, &cache, positives, negatives)?,
        };
        Some(map.value.abs_sum())
    } else {
        None
    };
    Ok(Step {
        loss: loss.value,
        acc,
        preds: predictions(&cache.output),
        grads,
        sensitivity,
        ms,
    })
}

#[allow(clippy::too_many_arguments)]
fn tape_step(
    model: &GcnModel,
    graph: &Graph,
    sup: &Supervision<'_>,
    negatives: &[(usize, usize)],
    track: bool,
    iteration: usize,
    precision: Precision,
    clock: Clock<'_>,
) -> Result<Step> {
    let t0 = clock();
    let targets = match *sup {
        Supervision::Node(labels) => Targets::Node { labels },
        Supervision::Link(positives) => Targets::Link { positives, negatives },
    };
    let propagation = model.propagation().matrix(graph);
    let tg = tape_grad_in(model, &propagation, graph.features(), targets, precision)?;
    let ms = clock() - t0;
    let unclamped = match *sup {
        Supervision::Node(labels) => node_loss(labels, &tg.output)?,
        Supervision::Link(positives) => link_loss(&tg.output, positives, negatives)?,
    };
    if tg.nan_flagged || unclamped.is_nan_flagged() || tg.weights.iter().any(|g| !g.is_finite()) {
        return Err(Error::NanLoss { iteration });
    }
    let acc = match *sup {
        Supervision::Node(labels) => Some(accuracy(labels, &tg.output)?),
        Supervision::Link(_) => None,
    };
    Ok(Step {
        loss: tg.loss,
        acc,
        preds: predictions(&tg.output),
        sensitivity: track.then(|| tg.features.abs_sum()),
        grads: tg.weights,
        ms,
    })
}

pub fn run_node_experiment(cfg: &ExperimentConfig, graph: &Graph) -> Result<TrainLog> {
    run_node_experiment_timed(cfg, graph, &no_clock)
}

pub fn run_node_experiment_timed(cfg: &ExperimentConfig, graph: &Graph, clock: Clock<'_>) -> Result<TrainLog> {
    if cfg.model.task != Task::Node {
        return Err(Error::Task("run_node_experiment needs a node-task config"));
    }
    let labels = graph
        .labels()
        .ok_or_else(|| Error::Config("node classification needs node labels".into()))?;
    run(cfg, graph, Supervision::Node(labels), clock)
}

pub fn run_link_experiment(cfg: &ExperimentConfig, graph: &Graph) -> Result<TrainLog> {
    run_link_experiment_timed(cfg, graph, &no_clock)
}

pub fn run_link_experiment_timed(cfg: &ExperimentConfig, graph: &Graph, clock: Clock<'_>) -> Result<TrainLog> {
    if cfg.model.task != Task::Link {
        return Err(Error::Task("run_link_experiment needs a link-task config"));
    }
    run(cfg, graph, Supervision::Link(graph.edges()), clock)
}

/// Dispatches on the configured task.
pub fn run_experiment(cfg: &ExperimentConfig, graph: &Graph) -> Result<TrainLog> {
    run_experiment_timed(cfg, graph, &no_clock)
}

pub fn run_experiment_timed(cfg: &ExperimentConfig, graph: &Graph, clock: Clock<'_>) -> Result<TrainLog> {
    match cfg.model.task {
        Task::Node => run_node_experiment_timed(cfg, graph, clock),
        Task::Link => run_link_experiment_timed(cfg, graph, clock),
    }
}

fn run(cfg: &ExperimentConfig, graph: &Graph, sup: Supervision<'_>, clock: Clock<'_>) -> Result<TrainLog> {
    cfg.validate()?;
    let init = cfg.initial_model()?;
    let mut closed = cfg.method.closed().then(|| init.clone());
    let mut tape = cfg.method.tape().then(|| init.clone());
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut samples = Vec::new();

    for t in 1..=cfg.iterations {
        let negatives = match sup {
            Supervision::Link(_) => {
                let mut s = graph.sample_negative_edges(cfg.negatives, iteration_seed(cfg.seed, t))?;
                s.iteration = t;
                samples.push(s);
                samples[samples.len() - 1].pairs.as_slice()
            }
            Supervision::Node(_) => &[],
        };
        // Sensitivity comes from the closed form when it runs.
        let track_closed = cfg.track_sensitivity;
        let track_tape = cfg.track_sensitivity && closed.is_none();

        let c = match &closed {
            Some(m) => Some(closed_step(m, graph, &sup, negatives, track_closed, t, clock)?),
            None => None,
        };
        let p = match &tape {
            Some(m) => Some(tape_step(m, graph, &sup, negatives, track_tape, t, cfg.baseline_precision, clock)?),
            None => None,
        };
        if let (Some(m), Some(step)) = (&mut closed, &c) {
            let next = sgd_step(m.weights(), &step.grads, cfg.learning_rate)?;
            m.set_weights(next)?;
        }
        if let (Some(m), Some(step)) = (&mut tape, &p) {
            let next = sgd_step(m.weights(), &step.grads, cfg.learning_rate)?;
            m.set_weights(next.into_iter().map(|w| cfg.baseline_precision.store(w)).collect())?;
        }
        let sse_row = match (&closed, &tape) {
            (Some(a), Some(b)) => a
                .weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| sse(x, y))
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        let sensitivity = c
            .as_ref()
            .and_then(|s| s.sensitivity)
            .or(p.as_ref().and_then(|s| s.sensitivity));
        records.push(IterationRecord {
            iteration: t,
            loss_closed: c.as_ref().map(|s| s.loss),
            loss_tape: p.as_ref().map(|s| s.loss),
            acc_closed: c.as_ref().and_then(|s| s.acc),
            acc_tape: p.as_ref().and_then(|s| s.acc),
            predictions_match: match (&c, &p) {
                (Some(a), Some(b)) => Some(a.preds == b.preds),
                _ => None,
            },
            sse: sse_row,
            sensitivity_abs_sum: sensitivity,
            ms_closed_form: c.as_ref().map_or(0.0, |s| s.ms),
            ms_tape: p.as_ref().map_or(0.0, |s| s.ms),
        });
    }

    Ok(TrainLog {
        task: cfg.model.task,
        method: cfg.method,
        initial_weights: init.weights().to_vec(),
        records,
        negatives: samples,
        final_closed: closed.map(|m| m.weights().to_vec()),
        final_tape: tape.map(|m| m.weights().to_vec()),
    })
}

/// Smallest `|z|` over pre-activations that feed a kinked activation, or
/// `+∞` when no layer has a kink.
pub fn kink_distance(model: &GcnModel, cache: &ForwardCache) -> f64 {
    let mut best = f64::INFINITY;
    for s in 1..=model.depth() {
        if model.activation(s).has_kink() {
            for &z in cache.z(s).as_slice() {
                best = best.min(z.abs());
            }
        }
    }
    // The output activation sees the readout.
    if model.activation(model.depth() + 1).has_kink() {
        for &z in cache.readout.as_slice() {
            best = best.min(z.abs());
        }
    }
    best
}

/// Whether any output probability lies outside the loss clamp, where the
/// clamped loss is flat but both analytic gradients pass straight through.
pub fn output_saturated(cache: &ForwardCache) -> bool {
    cache.output.as_slice().iter().any(|&p| clamp_prob(p) != p)
}

/// Seeded weights re-drawn until every kinked pre-activation is at least
/// `margin` away from zero and no output is clamped. Gives up after
/// `max_draws` and returns the last draw together with its distance.
pub fn draw_kink_free(
    spec: &ModelSpec,
    graph: &Graph,
    seed: u64,
    margin: f64,
    max_draws: usize,
) -> Result<(GcnModel, f64)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for _ in 0..max_draws.max(1) {
        let model = spec.build(glorot_weights(&spec.dims, &mut rng))?;
        let cache = forward(&model, graph)?;
        let dist = kink_distance(&model, &cache);
        if dist >= margin && !output_saturated(&cache) {
            return Ok((model, dist));
        }
        last = Some((model, dist));
    }
    last.ok_or_else(|| Error::Config("no draws attempted".into()))
}

/// Final per-layer SSE of one restart, `None` when the run hit a NaN loss.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    pub seed: u64,
    pub final_sse: Option<Vec<f64>>,
}

/// The paired configuration used for restart `index`.
pub fn restart_config(cfg: &ExperimentConfig, index: usize) -> ExperimentConfig {
    ExperimentConfig {
        seed: restart_seed(cfg.seed, index),
        method: GradMethod::Paired,
        track_sensitivity: false,
        initial_weights: None,
        ..cfg.clone()
    }
}

pub fn run_restart(cfg: &ExperimentConfig, graph: &Graph, index: usize) -> Result<RestartOutcome> {
    let rc = restart_config(cfg, index);
    match run_experiment(&rc, graph) {
        Ok(log) => Ok(RestartOutcome {
            index,
            seed: rc.seed,
            final_sse: log.final_sse().map(<[f64]>::to_vec),
        }),
        Err(Error::NanLoss { .. }) => Ok(RestartOutcome {
            index,
            seed: rc.seed,
            final_sse: None,
        }),
        Err(e) => Err(e),
    }
}

/// Box summaries of `log10` final SSE, one per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartSummary {
    pub restarts: usize,
    pub skipped: usize,
    pub layers: Vec<BoxSummary>,
}

pub fn summarize_restarts(outcomes: &[RestartOutcome], depth: usize) -> Result<RestartSummary> {
    let done: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o.final_sse.as_ref()).collect();
    let skipped = outcomes.len() - done.len();
    if done.is_empty() {
        return Err(Error::AllRestartsSkipped);
    }
    let mut layers = Vec::with_capacity(depth);
    for s in 0..depth {
        let logs: Vec<f64> = done.iter().map(|v| libm::log10(v[s])).collect();
        let mut summary = box_summary(&logs).ok_or(Error::AllRestartsSkipped)?;
        summary.skipped_nan = skipped;
        layers.push(summary);
    }
    Ok(RestartSummary {
        restarts: outcomes.len(),
        skipped,
        layers,
    })
}

/// Sequential restart study.
pub fn restart_study(cfg: &ExperimentConfig, graph: &Graph, restarts: usize) -> Result<(Vec<RestartOutcome>, RestartSummary)> {
    cfg.validate()?;
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let outcomes = (0..restarts)
        .map(|k| run_restart(cfg, graph, k))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_restarts(&outcomes, cfg.model.depth())?;
    Ok((outcomes, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ddi_fixture, karate_fixture};
    use alloc::vec;

    fn small_node_cfg() -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSpec {
                task: Task::Node,
                propagation: Propagation::Adjacency,
                dims: vec![34, 1],
                activations: vec![Activation::Identity, Activation::Sigmoid],
            },
            learning_rate: 0.1,
            iterations: 3,
            seed: 1,
            negatives: 0,
            restarts: 1,
            method: GradMethod::Paired,
            track_sensitivity: true,
            initial_weights: None,
            baseline_precision: Precision::Double,
        }
    }

    #[test]
    fn sgd_examples() {
        let w = vec![Matrix::from_fn(2, 3, |i, j| (i + j) as f64 - 1.5)];
        assert_eq!(sgd_step(&w, &[Matrix::zeros(2, 3)], 0.7).unwrap(), w);
        assert_eq!(sgd_step(&w, &w, 1.0).unwrap(), vec![Matrix::zeros(2, 3)]);
        assert!(sgd_step(&w, &[], 1.0).is_err());
        assert!(sgd_step(&w, &[Matrix::zeros(3, 2)], 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_node_cfg();
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
        cfg.learning_rate = 0.1;
        cfg.iterations = 0;
        assert!(cfg.validate().is_err());
        assert!(GradMethod::parse("adam").is_err());
        assert_eq!(GradMethod::parse("closed").unwrap(), GradMethod::ClosedForm);
    }

    #[test]
    fn paired_log_shape() {
        let g = karate_fixture();
        let log = run_node_experiment(&small_node_cfg(), &g).unwrap();
        assert_eq!(log.records.len(), 3);
        assert_eq!(log.sensitivity_series().len(), 3);
        for r in &log.records {
            assert_eq!(r.sse.len(), 1);
            assert!(r.loss_closed.is_some() && r.loss_tape.is_some());
            assert_eq!(r.predictions_match, Some(true));
        }
        assert!(run_link_experiment(&small_node_cfg(), &g).is_err());
    }

    #[test]
    fn single_method_runs_have_no_sse() {
        let g = karate_fixture();
        let mut cfg = small_node_cfg();
        cfg.method = GradMethod::Tape;
        let tape = run_node_experiment(&cfg, &g).unwrap();
        assert!(tape.final_closed.is_none());
        assert!(tape.records.iter().all(|r| r.sse.is_empty() && r.loss_closed.is_none()));
        assert_eq!(tape.sensitivity_series().len(), 3);
        cfg.method = GradMethod::ClosedForm;
        let closed = run_node_experiment(&cfg, &g).unwrap();
        assert!(closed.final_tape.is_none());
        assert!(closed.final_sse().is_none());
    }

    #[test]
    fn negatives_replayed_per_iteration() {
        let g = ddi_fixture();
        let cfg = ExperimentConfig {
            model: ModelSpec {
                task: Task::Link,
                propagation: Propagation::Normalized,
                dims: vec![20, 4, 3],
                activations: vec![Activation::Relu, Activation::Identity, Activation::Sigmoid],
            },
            learning_rate: 0.01,
            iterations: 4,
            seed: 11,
            negatives: 13,
            restarts: 1,
            method: GradMethod::Paired,
            track_sensitivity: false,
            initial_weights: None,
            baseline_precision: Precision::Double,
        };
        let a = run_link_experiment(&cfg, &g).unwrap();
        let b = run_link_experiment(&cfg, &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.negatives.len(), 4);
        for (k, s) in a.negatives.iter().enumerate() {
            assert_eq!(s.iteration, k + 1);
            assert_eq!(s.pairs.len(), 13);
            assert!(s.pairs.iter().all(|&(i, j)| !g.has_edge(i, j)));
        }
        assert_ne!(a.negatives[0], a.negatives[1]);
    }

    #[test]
    fn nan_loss_aborts_and_restart_skips() {
        let g = karate_fixture();
        let mut cfg = small_node_cfg();
        cfg.track_sensitivity = false;
        cfg.initial_weights = Some(vec![Matrix::filled(34, 1, f64::NAN)]);
        assert_eq!(run_node_experiment(&cfg, &g), Err(Error::NanLoss { iteration: 1 }));
    }

    #[test]
    fn restart_summary_of_one_run_is_that_run() {
        let g = karate_fixture();
        let mut cfg = small_node_cfg();
        cfg.track_sensitivity = false;
        let (outcomes, summary) = restart_study(&cfg, &g, 1).unwrap();
        let v = libm::log10(outcomes[0].final_sse.as_ref().unwrap()[0]);
        let l = &summary.layers[0];
        assert_eq!(summary.skipped, 0);
        for x in [l.median, l.q1, l.q3, l.lo_whisker, l.hi_whisker] {
            assert!(x == v || (x.is_infinite() && v.is_infinite()));
        }
    }

    #[test]
    fn all_skipped_is_an_error() {
        let outcomes = [RestartOutcome {
            index: 0,
            seed: 0,
            final_sse: None,
        }];
        assert_eq!(summarize_restarts(&outcomes, 1), Err(Error::AllRestartsSkipped));
    }

    #[test]
    fn seeds_are_distinct() {
        let seeds: Vec<u64> = (0..100).map(|k| restart_seed(42, k)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(iteration_seed(1, 1), iteration_seed(1, 2));
    }

    #[test]
    fn kink_free_draw_respects_margin() {
        let g = ddi_fixture();
        let spec = ModelSpec {
            task: Task::Link,
            propagation: Propagation::Normalized,
            dims: vec![20, 3, 2],
            activations: vec![Activation::Relu, Activation::leaky_relu(), Activation::Sigmoid],
        };
        let (model, dist) = draw_kink_free(&spec, &g, 5, KINK_MARGIN, 100).unwrap();
        assert!(dist >= KINK_MARGIN);
        assert_eq!(kink_distance(&model, &forward(&model, &g).unwrap()), dist);
    }
}
