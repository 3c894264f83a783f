//! JSON experiment configs and the bundled presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gcn_matgrad_core::oracle::Precision;
use gcn_matgrad_core::presets::{self, Dataset, DEFAULT_SEED, NEGATIVES_PER_ITERATION};
use gcn_matgrad_core::{Activation, ExperimentConfig, GradMethod, Graph, ModelSpec, Propagation, Task};

use crate::io;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("config {origin}: {message}")]
    Json { origin: String, message: String },
    #[error(transparent)]
    Io(#[from] io::IoError),
}

fn field(name: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: name.into(),
        message: message.into(),
    }
}

/// Either a bundled dataset name or files on disk. Relative paths resolve
/// against the directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Builtin(String),
    Files(DatasetFiles),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFiles {
    /// Edge list; exclusive with `adjacency`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    /// Dense symmetric 0/1 CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub task: String,
    pub dataset: DatasetSource,
    pub dims: Vec<usize>,
    pub activations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<String>,
    pub learning_rate: f64,
    pub iterations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negatives: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub track_sensitivity: bool,
    #[serde(default = "default_precision")]
    pub baseline_precision: String,
    /// One CSV per weight matrix, overriding the seeded initialization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<PathBuf>>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_restarts() -> usize {
    1
}

fn default_method() -> String {
    "paired".into()
}

fn default_precision() -> String {
    "double".into()
}

/// A config checked against its graph.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub name: String,
    pub config: ExperimentConfig,
    pub graph: Graph,
}

pub fn parse_propagation(s: &str) -> Option<Propagation> {
    match s {
        "adjacency" | "A" => Some(Propagation::Adjacency),
        "normalized" | "normalized_adjacency" => Some(Propagation::Normalized),
        _ => None,
    }
}

pub fn propagation_name(p: Propagation) -> &'static str {
    match p {
        Propagation::Adjacency => "adjacency",
        Propagation::Normalized => "normalized",
    }
}

impl ConfigFile {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn from_preset(p: &presets::Preset) -> Self {
        let c = &p.config;
        ConfigFile {
            name: Some(p.name.to_string()),
            task: c.model.task.name().to_string(),
            dataset: DatasetSource::Builtin(p.dataset.name().to_string()),
            dims: c.model.dims.clone(),
            activations: c.model.activations.iter().map(Activation::to_string).collect(),
            propagation: Some(propagation_name(c.model.propagation).to_string()),
            learning_rate: c.learning_rate,
            iterations: c.iterations,
            seed: c.seed,
            negatives: Some(c.negatives),
            restarts: c.restarts,
            method: c.method.name().to_string(),
            track_sensitivity: c.track_sensitivity,
            baseline_precision: c.baseline_precision.name().to_string(),
            weights: None,
        }
    }

    fn graph(&self, base: &Path) -> Result<Graph, ConfigError> {
        match &self.dataset {
            DatasetSource::Builtin(name) => Dataset::parse(name)
                .map(|d| d.graph())
                .map_err(|_| field("dataset", format!("unknown dataset {name:?}; expected \"karate\" or \"ddi\""))),
            DatasetSource::Files(f) => {
                let at = |p: &PathBuf| base.join(p);
                let features = f.features.as_ref().map(at);
                let labels = f.labels.as_ref().map(at);
                match (&f.edges, &f.adjacency) {
                    (Some(e), None) => Ok(io::load_graph(&at(e), features.as_deref(), labels.as_deref(), f.nodes)?),
                    (None, Some(a)) => {
                        let edges = io::load_adjacency(&at(a))?;
                        let n = io::load_matrix(&at(a))?.rows();
                        let x = features.as_deref().map(io::load_matrix).transpose()?;
                        let y = labels.as_deref().map(io::load_matrix).transpose()?;
                        Graph::new(n, edges, x.unwrap_or_else(|| gcn_matgrad_core::Matrix::identity(n)), y)
                            .map_err(|e| field("dataset", e.to_string()))
                    }
                    _ => Err(field("dataset", "give exactly one of `edges` or `adjacency`")),
                }
            }
        }
    }

    /// Validates every field and loads the graph and any weight files.
    pub fn resolve(&self, base: &Path) -> Result<Loaded, ConfigError> {
        let task = match self.task.as_str() {
            "node" => Task::Node,
            "link" => Task::Link,
            other => return Err(field("task", format!("expected \"node\" or \"link\", got {other:?}"))),
        };
        let activations = self
            .activations
            .iter()
            .enumerate()
            .map(|(k, s)| s.parse::<Activation>().map_err(|e| field(format!("activations[{k}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if self.dims.len() < 2 {
            return Err(field("dims", "need at least an input and an output width"));
        }
        if let Some(k) = self.dims.iter().position(|&d| d == 0) {
            return Err(field(format!("dims[{k}]"), "widths must be positive"));
        }
        if activations.len() != self.dims.len() {
            return Err(field(
                "activations",
                format!(
                    "{} layers need {} activations (one per layer plus the output), got {}",
                    self.dims.len() - 1,
                    self.dims.len(),
                    activations.len()
                ),
            ));
        }
        let propagation = match &self.propagation {
            None => task.default_propagation(),
            Some(s) => parse_propagation(s)
                .ok_or_else(|| field("propagation", format!("expected \"adjacency\" or \"normalized\", got {s:?}")))?,
        };
        let model = ModelSpec {
            task,
            propagation,
            dims: self.dims.clone(),
            activations,
        };
        model.validate().map_err(|e| {
            let name = if task == Task::Node && *self.dims.last().unwrap() != 1 {
                "dims"
            } else {
                "activations"
            };
            field(name, e.to_string())
        })?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(field("learning_rate", format!("must be positive, got {}", self.learning_rate)));
        }
        if self.iterations == 0 {
            return Err(field("iterations", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(field("restarts", "must be at least 1"));
        }
        let method = GradMethod::parse(&self.method)
            .map_err(|_| field("method", format!("expected closed, tape or paired, got {:?}", self.method)))?;
        let baseline_precision = Precision::parse(&self.baseline_precision).map_err(|_| {
            field(
                "baseline_precision",
                format!("expected \"double\" or \"single\", got {:?}", self.baseline_precision),
            )
        })?;

        let graph = self.graph(base)?;
        if graph.features().cols() != self.dims[0] {
            return Err(field(
                "dims[0]",
                format!("input width {} but the features have {} columns", self.dims[0], graph.features().cols()),
            ));
        }
        if task == Task::Node && graph.labels().is_none() {
            return Err(field("dataset", "node classification needs labels"));
        }
        let negatives = match task {
            Task::Node => self.negatives.unwrap_or(0),
            Task::Link => self.negatives.unwrap_or(NEGATIVES_PER_ITERATION),
        };
        if task == Task::Link {
            let available = graph.non_edges().len();
            if negatives > available {
                return Err(field("negatives", format!("{negatives} requested but only {available} non-edges exist")));
            }
            if graph.edge_count() == 0 {
                return Err(field("dataset", "link prediction needs at least one edge"));
            }
        }

        let initial_weights = match &self.weights {
            None => None,
            Some(paths) => {
                if paths.len() != model.depth() {
                    return Err(field(
                        "weights",
                        format!("{} files for a {}-layer model", paths.len(), model.depth()),
                    ));
                }
                let mut ws = Vec::with_capacity(paths.len());
                for (k, p) in paths.iter().enumerate() {
                    let w = io::load_matrix(&base.join(p))?;
                    let want = (self.dims[k], self.dims[k + 1]);
                    if w.shape() != want {
                        return Err(field(format!("weights[{k}]"), format!("expected {want:?}, found {:?}", w.shape())));
                    }
                    ws.push(w);
                }
                Some(ws)
            }
        };

        let config = ExperimentConfig {
            model,
            learning_rate: self.learning_rate,
            iterations: self.iterations,
            seed: self.seed,
            negatives,
            restarts: self.restarts,
            method,
            track_sensitivity: self.track_sensitivity,
            initial_weights,
            baseline_precision,
        };
        config.validate().map_err(|e| field("config", e.to_string()))?;
        Ok(Loaded {
            name: self.name.clone().unwrap_or_else(|| "custom".into()),
            config,
            graph,
        })
    }
}

pub fn load_config(path: &Path) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| io::IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let file = ConfigFile::from_json(&text, &path.display().to_string())?;
    file.resolve(path.parent().unwrap_or(Path::new(".")))
}

pub const PRESET_JSON: [(&str, &str); 4] = [
    ("karate", include_str!("../presets/karate.json")),
    ("ddi", include_str!("../presets/ddi.json")),
    ("node5", include_str!("../presets/node5.json")),
    ("link5", include_str!("../presets/link5.json")),
];

pub fn preset_file(name: &str) -> Result<ConfigFile, ConfigError> {
    let (_, text) = PRESET_JSON.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        field(
            "preset",
            format!("unknown preset {name:?}; expected one of {:?}", presets::PRESET_NAMES),
        )
    })?;
    ConfigFile::from_json(text, name)
}

pub fn load_preset(name: &str) -> Result<Loaded, ConfigError> {
    preset_file(name)?.resolve(Path::new("."))
}
