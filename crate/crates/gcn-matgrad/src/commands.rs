//! The CLI verbs as library functions, so tests can drive them without a
//! subprocess.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gcn_matgrad_core::gcn::forward;
use gcn_matgrad_core::matgrad::{link_input_sensitivity, link_output_sensitivity, node_input_sensitivity, weight_grads};
use gcn_matgrad_core::oracle::{gradient_triangle, tape_grad, LayerCheck, SseReport, FD_STEP};
use gcn_matgrad_core::train::{draw_kink_free, iteration_seed, run_experiment_timed, KINK_MARGIN};
use gcn_matgrad_core::{Error, GradMethod, Matrix, Targets, Task};

use crate::config::{self, ConfigError, Loaded};
use crate::io::{self, IoError};
use crate::parallel::{self, StudyError};
use crate::report;

/// SSE ceiling between closed form and tape in `validate-grad`.
pub const TAPE_SSE_TOL: f64 = 1e-12;
/// Relative Frobenius ceiling between closed form and finite differences.
pub const FD_REL_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NanAbort(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    /// 0 success, 1 config or IO error, 2 NaN abort, 3 validation failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::NanAbort(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NanLoss { .. } | Error::AllRestartsSkipped => CliError::NanAbort(e.to_string()),
            Error::Config(_) | Error::Graph(_) | Error::Model(_) | Error::Task(_) | Error::Capacity { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Core(c) => c.into(),
            StudyError::Pool(m) => CliError::Config(m),
        }
    }
}

/// Where a config comes from, plus command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Source {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub method: Option<String>,
    pub iterations: Option<usize>,
    pub restarts: Option<usize>,
}

impl Source {
    pub fn preset(name: &str) -> Self {
        Source {
            preset: Some(name.into()),
            ..Source::default()
        }
    }

    pub fn load(&self) -> Result<Loaded, CliError> {
        let mut loaded = match (&self.config, &self.preset) {
            (Some(p), None) => config::load_config(p)?,
            (None, Some(name)) => config::load_preset(name)?,
            _ => return Err(CliError::Config("give exactly one of --config or --preset".into())),
        };
        let cfg = &mut loaded.config;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.method {
            cfg.method = GradMethod::parse(m).map_err(|_| {
                CliError::Config(format!("--method expects closed, tape or paired, got {m:?}"))
            })?;
        }
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        if let Some(n) = self.restarts {
            cfg.restarts = n;
        }
        cfg.validate()?;
        Ok(loaded)
    }
}

/// Files written and a one-line summary for stdout.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub message: String,
}

fn prepare(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn emit(out: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = out.join(name);
    io::write_file(&path, body)?;
    files.push(path);
    Ok(())
}

fn stopwatch() -> impl Fn() -> f64 {
    let start = Instant::now();
    move || start.elapsed().as_secs_f64() * 1e3
}

fn task_verb(task: Task) -> &'static str {
    match task {
        Task::Node => "train-node",
        Task::Link => "train-link",
    }
}

/// `train-node` / `train-link`.
pub fn train(task: Task, src: &Source, out: &Path, timed: bool) -> Result<Outcome, CliError> {
    let loaded = src.load()?;
    if loaded.config.model.task != task {
        return Err(CliError::Config(format!(
            "config field `task`: {} is a {} config; use {}",
            loaded.name,
            loaded.config.model.task.name(),
            task_verb(loaded.config.model.task)
        )));
    }
    let clock = stopwatch();
    let log = if timed {
        run_experiment_timed(&loaded.config, &loaded.graph, &clock)?
    } else {
        gcn_matgrad_core::train::run_experiment(&loaded.config, &loaded.graph)?
    };
    prepare(out)?;
    let mut files = Vec::new();
    emit(out, "train_log.csv", &report::train_log_csv(&log), &mut files)?;
    for (k, w) in log.final_weights().iter().enumerate() {
        emit(out, &format!("weights_W{}.csv", k + 1), &io::matrix_to_csv(w), &mut files)?;
    }
    if log.method == GradMethod::Paired {
        if let Some(ws) = &log.final_tape {
            for (k, w) in ws.iter().enumerate() {
                emit(out, &format!("weights_tape_W{}.csv", k + 1), &io::matrix_to_csv(w), &mut files)?;
            }
        }
        emit(out, "sse_report.csv", &report::sse_report_csv(&report::log_sse_reports(&log), timed), &mut files)?;
    }
    if task == Task::Link {
        emit(out, "negatives.csv", &report::negatives_csv(&log), &mut files)?;
    }
    let series = log.sensitivity_series();
    if !series.is_empty() {
        emit(out, "sensitivity_series.csv", &report::series_csv(&series), &mut files)?;
    }
    let last = log.records.last().expect("at least one iteration");
    let loss = last.loss_closed.or(last.loss_tape).unwrap_or(f64::NAN);
    let message = match log.method {
        GradMethod::Paired => format!(
            "{}: {} iterations, final loss {loss:.6}, max SSE {:e}",
            loaded.name,
            log.records.len(),
            log.max_sse()
        ),
        _ => format!("{}: {} iterations, final loss {loss:.6}", loaded.name, log.records.len()),
    };
    Ok(Outcome { files, message })
}

/// Result of the three-way gradient check.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub report: SseReport,
    pub layers: Vec<LayerCheck>,
    pub kink_distance: f64,
}

impl GradCheck {
    pub fn failing(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter(|c| !(c.sse_tape <= TAPE_SSE_TOL && c.rel_fd <= FD_REL_TOL && c.fd_non_finite == 0))
            .map(|c| c.layer)
            .collect()
    }
}

/// Closed form, tape and finite differences at one initialization.
/// `corrupt` perturbs the closed-form gradient of that layer, a negative
/// control for the thresholds.
pub fn check_gradients(loaded: &Loaded, corrupt: Option<usize>, timed: bool) -> Result<GradCheck, CliError> {
    let cfg = &loaded.config;
    let g = &loaded.graph;
    let (model, kink_distance) = match &cfg.initial_weights {
        Some(w) => {
            let m = cfg.model.build(w.clone())?;
            let c = forward(&m, g)?;
            let d = gcn_matgrad_core::train::kink_distance(&m, &c);
            (m, d)
        }
        None => draw_kink_free(&cfg.model, g, cfg.seed, KINK_MARGIN, 1000)?,
    };
    let negatives = match cfg.model.task {
        Task::Link => g.sample_negative_edges(cfg.negatives, iteration_seed(cfg.seed, 1))?.pairs,
        Task::Node => Vec::new(),
    };
    let targets = match cfg.model.task {
        Task::Node => Targets::Node {
            labels: g.labels().ok_or_else(|| CliError::Config("config field `dataset`: labels required".into()))?,
        },
        Task::Link => Targets::Link {
            positives: g.edges(),
            negatives: &negatives,
        },
    };
    let clock = stopwatch();
    let t0 = clock();
    let cache = forward(&model, g)?;
    let mut closed = weight_grads(&model, &cache, targets)?;
    let t1 = clock();
    let tape = tape_grad(&model, g, targets)?;
    let t2 = clock();
    if let Some(s) = corrupt {
        let gr = closed
            .get_mut(s.wrapping_sub(1))
            .ok_or_else(|| CliError::Config(format!("corrupt layer {s} out of range 1..={}", model.depth())))?;
        let bump = 1e-3 * gr.max_abs().max(1.0);
        gr.set(0, 0, gr.get(0, 0) + bump);
    }
    let mut report = SseReport::compare(0, &closed, &tape.weights)?;
    if timed {
        report.ms_closed_form = t1 - t0;
        report.ms_tape = t2 - t1;
    }
    let layers = gradient_triangle(&model, g, targets, &closed, FD_STEP)?;
    Ok(GradCheck {
        report,
        layers,
        kink_distance,
    })
}

fn grad_check_csv(check: &GradCheck) -> String {
    let mut out = String::from("layer,sse_tape,rel_fd,fd_non_finite,status\n");
    let failing = check.failing();
    for c in &check.layers {
        let status = if failing.contains(&c.layer) { "fail" } else { "pass" };
        out.push_str(&format!("{},{:e},{:e},{},{status}\n", c.layer, c.sse_tape, c.rel_fd, c.fd_non_finite));
    }
    out
}

/// `validate-grad`.
pub fn validate_grad(src: &Source, out: &Path, corrupt: Option<usize>, timed: bool) -> Result<Outcome, CliError> {
    let loaded = src.load()?;
    let check = check_gradients(&loaded, corrupt, timed)?;
    prepare(out)?;
    let mut files = Vec::new();
    emit(out, "sse_report.csv", &report::sse_report_csv(std::slice::from_ref(&check.report), timed), &mut files)?;
    emit(out, "grad_check.csv", &grad_check_csv(&check), &mut files)?;
    let failing = check.failing();
    if !failing.is_empty() {
        let detail: Vec<String> = check
            .layers
            .iter()
            .filter(|c| failing.contains(&c.layer))
            .map(|c| format!("W{} (tape SSE {:e}, FD rel {:e})", c.layer, c.sse_tape, c.rel_fd))
            .collect();
        return Err(CliError::Validation(format!(
            "{}: gradient check failed for {}",
            loaded.name,
            detail.join(", ")
        )));
    }
    let worst_fd = check.layers.iter().map(|c| c.rel_fd).fold(0.0, f64::max);
    Ok(Outcome {
        files,
        message: format!(
            "{}: {} layers pass (max tape SSE {:e}, max FD rel {:e})",
            loaded.name,
            check.layers.len(),
            check.report.max_sse(),
            worst_fd
        ),
    })
}

/// What a sensitivity map differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Loss,
    Entry(usize, usize),
}

impl Target {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "loss" {
            return Ok(Target::Loss);
        }
        let bad = || CliError::Config(format!("--target expects \"loss\" or \"i,j\", got {s:?}"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let i = a.trim().parse().map_err(|_| bad())?;
        let j = b.trim().parse().map_err(|_| bad())?;
        Ok(Target::Entry(i, j))
    }
}

/// Sensitivity map at the trained weights, plus the per-iteration series.
pub fn sensitivity_map(loaded: &Loaded, target: Target) -> Result<(Matrix, Vec<f64>), CliError> {
    let task = loaded.config.model.task;
    let g = &loaded.graph;
    if let Target::Entry(i, j) = target {
        if task == Task::Node {
            return Err(CliError::Config("--target \"i,j\" needs a link config; node configs take \"loss\"".into()));
        }
        if i >= g.node_count() || j >= g.node_count() {
            return Err(CliError::Config(format!("--target ({i},{j}) out of range for {} nodes", g.node_count())));
        }
    }
    let cfg = gcn_matgrad_core::ExperimentConfig {
        method: GradMethod::ClosedForm,
        track_sensitivity: true,
        ..loaded.config.clone()
    };
    let log = gcn_matgrad_core::train::run_experiment(&cfg, g)?;
    let model = cfg.model.build(log.final_weights().to_vec())?;
    let cache = forward(&model, g)?;
    let map = match (task, target) {
        (Task::Node, _) => node_input_sensitivity(&model, &cache, g.labels().expect("checked at load"))?,
        (Task::Link, Target::Entry(i, j)) => link_output_sensitivity(&model, &cache, i, j)?,
        (Task::Link, Target::Loss) => {
            let last = log.negatives.last().map(|s| s.pairs.clone()).unwrap_or_default();
            link_input_sensitivity(&model, &cache, g.edges(), &last)?
        }
    };
    Ok((map.value, log.sensitivity_series()))
}

/// `sensitivity`.
pub fn sensitivity(src: &Source, target: &str, out: &Path) -> Result<Outcome, CliError> {
    let target = Target::parse(target)?;
    let loaded = src.load()?;
    let (map, series) = sensitivity_map(&loaded, target)?;
    prepare(out)?;
    let mut files = Vec::new();
    emit(out, "sensitivity.csv", &io::matrix_to_csv(&map), &mut files)?;
    emit(out, "sensitivity_series.csv", &report::series_csv(&series), &mut files)?;
    let zero_rows = (0..map.rows()).filter(|&k| map.row_slice(k).iter().all(|&v| v == 0.0)).count();
    Ok(Outcome {
        files,
        message: format!(
            "{}: {}x{} map, {zero_rows} all-zero rows, |map| = {:e}",
            loaded.name,
            map.rows(),
            map.cols(),
            map.abs_sum()
        ),
    })
}

/// `restart-study`.
pub fn restart_study(src: &Source, out: &Path) -> Result<Outcome, CliError> {
    let loaded = src.load()?;
    let threads = parallel::thread_cap().map_err(CliError::Config)?;
    let cfg = &loaded.config;
    let (outcomes, summary) = parallel::restart_study(cfg, &loaded.graph, cfg.restarts, threads)?;
    prepare(out)?;
    let mut files = Vec::new();
    emit(out, "restarts.csv", &report::restarts_csv(&outcomes, cfg.model.depth()), &mut files)?;
    emit(
        out,
        "summary.json",
        &report::summary_json(&loaded.name, cfg.baseline_precision.name(), &summary),
        &mut files,
    )?;
    let medians: Vec<String> = summary.layers.iter().map(|b| format!("{:.2}", b.median)).collect();
    Ok(Outcome {
        files,
        message: format!(
            "{}: {} restarts, {} skipped, median log10 SSE per layer [{}]",
            loaded.name,
            summary.restarts,
            summary.skipped,
            medians.join(", ")
        ),
    })
}

/// `fixtures`.
pub fn fixtures(out: &Path) -> Result<Outcome, CliError> {
    let files = io::write_fixtures(out)?;
    Ok(Outcome {
        message: format!("wrote {} fixture files to {}", files.len(), out.display()),
        files,
    })
}
