//! CSV and JSON renderings of training logs, SSE reports and restart
//! studies. Column names follow the quantities plotted for each
//! experiment. Missing values are empty fields.

use std::fmt::Write as _;

use serde::Serialize;

use gcn_matgrad_core::oracle::SseReport;
use gcn_matgrad_core::stats::BoxSummary;
use gcn_matgrad_core::train::{RestartOutcome, RestartSummary};
use gcn_matgrad_core::TrainLog;

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// SSE values span dozens of decades, so they are written in exponent form.
fn sci(v: Option<&f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn layer_columns(prefix: &str, depth: usize) -> String {
    (1..=depth).map(|s| format!(",{prefix}W{s}")).collect()
}

/// `iteration,loss_closed,loss_tape,acc_closed,acc_tape,sse_W1…,predictions_match,sensitivity_abs_sum`.
pub fn train_log_csv(log: &TrainLog) -> String {
    let depth = log.depth();
    let mut out = format!(
        "iteration,loss_closed,loss_tape,acc_closed,acc_tape{},predictions_match,sensitivity_abs_sum\n",
        layer_columns("sse_", depth)
    );
    for r in &log.records {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.iteration,
            opt(r.loss_closed),
            opt(r.loss_tape),
            opt(r.acc_closed),
            opt(r.acc_tape)
        );
        for s in 0..depth {
            out.push(',');
            out.push_str(&sci(r.sse.get(s)));
        }
        let _ = writeln!(out, ",{},{}", opt(r.predictions_match), opt(r.sensitivity_abs_sum));
    }
    out
}

/// Per-iteration SSE rows taken from a paired log.
pub fn log_sse_reports(log: &TrainLog) -> Vec<SseReport> {
    log.records
        .iter()
        .filter(|r| !r.sse.is_empty())
        .map(|r| SseReport {
            iteration: r.iteration,
            layers: r
                .sse
                .iter()
                .enumerate()
                .map(|(k, &sse)| gcn_matgrad_core::oracle::LayerSse { layer: k + 1, sse })
                .collect(),
            ms_closed_form: r.ms_closed_form,
            ms_tape: r.ms_tape,
        })
        .collect()
}

/// `iteration,layer,sse,log10_sse,ms_closed_form,ms_tape`. Timings are
/// left empty unless `timed`, which keeps untimed output byte-stable.
pub fn sse_report_csv(reports: &[SseReport], timed: bool) -> String {
    let mut out = String::from("iteration,layer,sse,log10_sse,ms_closed_form,ms_tape\n");
    for r in reports {
        let (a, b) = if timed {
            (r.ms_closed_form.to_string(), r.ms_tape.to_string())
        } else {
            (String::new(), String::new())
        };
        for l in &r.layers {
            let _ = writeln!(out, "{},{},{:e},{},{a},{b}", r.iteration, l.layer, l.sse, l.log10_sse());
        }
    }
    out
}

/// `iteration,i,j`: the negative pairs drawn at every iteration.
pub fn negatives_csv(log: &TrainLog) -> String {
    let mut out = String::from("iteration,i,j\n");
    for s in &log.negatives {
        for (i, j) in &s.pairs {
            let _ = writeln!(out, "{},{i},{j}", s.iteration);
        }
    }
    out
}

/// `iteration,abs_sum`.
pub fn series_csv(series: &[f64]) -> String {
    let mut out = String::from("iteration,abs_sum\n");
    for (k, v) in series.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", k + 1);
    }
    out
}

/// `restart,seed,status,sse_W1…`.
pub fn restarts_csv(outcomes: &[RestartOutcome], depth: usize) -> String {
    let mut out = format!("restart,seed,status{}\n", layer_columns("sse_", depth));
    for o in outcomes {
        let status = if o.final_sse.is_some() { "ok" } else { "nan" };
        let _ = write!(out, "{},{},{status}", o.index, o.seed);
        for s in 0..depth {
            out.push(',');
            out.push_str(&sci(o.final_sse.as_ref().map(|v| &v[s])));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct LayerJson {
    layer: usize,
    count: usize,
    median: f64,
    q1: f64,
    q3: f64,
    lo_whisker: f64,
    hi_whisker: f64,
    outlier_count: usize,
    skipped_nan: usize,
}

impl LayerJson {
    fn new(layer: usize, b: &BoxSummary) -> Self {
        Self {
            layer,
            count: b.count,
            median: b.median,
            q1: b.q1,
            q3: b.q3,
            lo_whisker: b.lo_whisker,
            hi_whisker: b.hi_whisker,
            outlier_count: b.outlier_count,
            skipped_nan: b.skipped_nan,
        }
    }
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    name: &'a str,
    baseline_precision: &'a str,
    restarts: usize,
    skipped: usize,
    /// Box statistics of `log10` final SSE. Non-finite values (a zero SSE)
    /// are written as `null`.
    layers: Vec<LayerJson>,
}

pub fn summary_json(name: &str, precision: &str, summary: &RestartSummary) -> String {
    let body = SummaryJson {
        name,
        baseline_precision: precision,
        restarts: summary.restarts,
        skipped: summary.skipped,
        layers: summary.layers.iter().enumerate().map(|(k, b)| LayerJson::new(k + 1, b)).collect(),
    };
    serde_json::to_string_pretty(&body).expect("summary serializes") + "\n"
}
