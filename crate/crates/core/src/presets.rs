//! The four experiment configurations and the datasets they run on.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::gcn::{Propagation, Task};
use crate::graph::{ddi_fixture, karate_fixture, Graph};
use crate::oracle::Precision;
use crate::matrix::Matrix;
use crate::train::{ExperimentConfig, GradMethod, ModelSpec};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_RESTARTS: usize = 100;
pub const NEGATIVES_PER_ITERATION: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dataset {
    Karate,
    Ddi,
}

impl Dataset {
    pub fn name(&self) -> &'static str {
        match self {
            Dataset::Karate => "karate",
            Dataset::Ddi => "ddi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "karate" => Ok(Dataset::Karate),
            "ddi" => Ok(Dataset::Ddi),
            other => Err(Error::Config(alloc::format!("unknown dataset {other:?}"))),
        }
    }

    pub fn graph(&self) -> Graph {
        match self {
            Dataset::Karate => karate_fixture(),
            Dataset::Ddi => ddi_fixture(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub dataset: Dataset,
    pub config: ExperimentConfig,
}

pub const PRESET_NAMES: [&str; 4] = ["karate", "ddi", "node5", "link5"];

fn config(
    task: Task,
    dims: &[usize],
    activations: &[Activation],
    learning_rate: f64,
    iterations: usize,
    negatives: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec {
            task,
            propagation: task.default_propagation(),
            dims: dims.to_vec(),
            activations: activations.to_vec(),
        },
        learning_rate,
        iterations,
        seed: DEFAULT_SEED,
        negatives,
        restarts: 1,
        method: GradMethod::Paired,
        track_sensitivity: false,
        initial_weights: None,
        baseline_precision: Precision::Double,
    }
}

/// One layer on Zachary's karate club, `H_0 = I_34`.
pub fn karate() -> Preset {
    let mut cfg = config(
        Task::Node,
        &[34, 1],
        &[Activation::Identity, Activation::Sigmoid],
        0.1,
        100,
        0,
    );
    cfg.track_sensitivity = true;
    Preset {
        name: "karate",
        dataset: Dataset::Karate,
        config: cfg,
    }
}

/// Two layers on the 10-drug interaction fixture.
pub fn ddi() -> Preset {
    let mut cfg = config(
        Task::Link,
        &[20, 10, 5],
        &[Activation::Relu, Activation::Identity, Activation::Sigmoid],
        0.01,
        150,
        NEGATIVES_PER_ITERATION,
    );
    cfg.track_sensitivity = true;
    Preset {
        name: "ddi",
        dataset: Dataset::Ddi,
        config: cfg,
    }
}

/// Five-layer node classifier for restart studies, compared against a
/// single-precision tape. The input width is 34 because `H_0 = I_34`.
pub fn node5() -> Preset {
    let mut cfg = config(
        Task::Node,
        &[34, 2, 3, 2, 3, 1],
        &[
            Activation::Relu,
            Activation::Silu,
            Activation::elu(),
            Activation::leaky_relu(),
            Activation::Identity,
            Activation::Sigmoid,
        ],
        3e-5,
        10,
        0,
    );
    cfg.restarts = DEFAULT_RESTARTS;
    cfg.baseline_precision = Precision::Single;
    Preset {
        name: "node5",
        dataset: Dataset::Karate,
        config: cfg,
    }
}

/// Five-layer link predictor for restart studies, compared against a
/// single-precision tape.
pub fn link5() -> Preset {
    let mut cfg = config(
        Task::Link,
        &[20, 2, 3, 5, 3, 40],
        &[
            Activation::leaky_relu(),
            Activation::elu(),
            Activation::Silu,
            Activation::Relu,
            Activation::Identity,
            Activation::Sigmoid,
        ],
        0.9,
        10,
        NEGATIVES_PER_ITERATION,
    );
    cfg.restarts = DEFAULT_RESTARTS;
    cfg.baseline_precision = Precision::Single;
    Preset {
        name: "link5",
        dataset: Dataset::Ddi,
        config: cfg,
    }
}

pub fn all() -> [Preset; 4] {
    [karate(), ddi(), node5(), link5()]
}

pub fn by_name(name: &str) -> Result<Preset> {
    match name {
        "karate" => Ok(karate()),
        "ddi" => Ok(ddi()),
        "node5" => Ok(node5()),
        "link5" => Ok(link5()),
        other => Err(Error::Config(alloc::format!(
            "unknown preset {other:?}; expected one of {PRESET_NAMES:?}"
        ))),
    }
}

/// A small random architecture on a random graph, for gradient checks.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomCase {
    pub spec: ModelSpec,
    pub graph: Graph,
    pub negatives: Vec<(usize, usize)>,
}

/// Hidden activations cycle through all six kinds (offset by `index`), the
/// output is a sigmoid. At most 8 nodes, at most 4 layers, widths up to 4.
pub fn random_case(index: usize, seed: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = rng.gen_range(3..=8usize);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    let task = if index.is_multiple_of(2) { Task::Node } else { Task::Link };
    let propagation = if rng.gen_bool(0.5) {
        Propagation::Adjacency
    } else {
        Propagation::Normalized
    };
    let depth = rng.gen_range(1..=4usize);
    let mut dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=4usize)).collect();
    if task == Task::Node {
        dims[depth] = 1;
    }
    let mut activations: Vec<Activation> = (0..depth).map(|s| Activation::ALL[(index + s) % 6]).collect();
    activations.push(Activation::Sigmoid);
    let features = Matrix::from_fn(n, dims[0], |_, _| rng.gen_range(-1.0..1.0));
    let labels = (task == Task::Node)
        .then(|| Matrix::from_fn(n, 1, |_, _| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }));
    let graph = Graph::new(n, edges, features, labels).expect("generated graph is valid");
    let pool = graph.non_edges();
    let take = pool.len().min(3);
    let negatives = index::sample(&mut rng, pool.len(), take)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    RandomCase {
        spec: ModelSpec {
            task,
            propagation,
            dims,
            activations,
        },
        graph,
        negatives,
    }
}
