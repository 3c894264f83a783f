//! Restart studies fanned out over a rayon pool.

use rayon::prelude::*;

use gcn_matgrad_core::train::{run_restart, summarize_restarts, RestartOutcome, RestartSummary};
use gcn_matgrad_core::{Error, ExperimentConfig, Graph};

/// Caps the worker count of restart studies.
pub const THREADS_ENV: &str = "GCN_MATGRAD_THREADS";

/// Worker count from [`THREADS_ENV`], `None` to let rayon decide.
pub fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Pool(String),
}

/// Same outcomes as the sequential study, in restart order, whatever the
/// thread count: every restart owns its seed.
pub fn restart_study(
    cfg: &ExperimentConfig,
    graph: &Graph,
    restarts: usize,
    threads: Option<usize>,
) -> Result<(Vec<RestartOutcome>, RestartSummary), StudyError> {
    cfg.validate()?;
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()).into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| StudyError::Pool(e.to_string()))?;
    let outcomes = pool.install(|| {
        (0..restarts)
            .into_par_iter()
            .map(|k| run_restart(cfg, graph, k))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let summary = summarize_restarts(&outcomes, cfg.model.depth())?;
    Ok((outcomes, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gcn_matgrad_core::presets;

    #[test]
    fn matches_the_sequential_study() {
        let p = presets::ddi();
        let cfg = ExperimentConfig { iterations: 3, ..p.config };
        let g = p.dataset.graph();
        let seq = gcn_matgrad_core::train::restart_study(&cfg, &g, 4).unwrap();
        let par = restart_study(&cfg, &g, 4, Some(3)).unwrap();
        assert_eq!(seq, par);
    }
}
