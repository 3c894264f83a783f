//! Box-plot summaries with linearly interpolated quartiles and whiskers at
//! 1.5 × IQR.

use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxSummary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest observation not below `q1 − 1.5·IQR`.
    pub lo_whisker: f64,
    /// Largest observation not above `q3 + 1.5·IQR`.
    pub hi_whisker: f64,
    pub outlier_count: usize,
    pub skipped_nan: usize,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    // Keeps −∞ entries (from log10 of a zero SSE) from turning into NaN.
    if frac == 0.0 || a == b || a == f64::NEG_INFINITY {
        a
    } else if b == f64::INFINITY {
        b
    } else {
        a + frac * (b - a)
    }
}

/// Summary of `values`; NaN entries are dropped and counted. `None` when
/// nothing remains.
pub fn box_summary(values: &[f64]) -> Option<BoxSummary> {
    let mut kept: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    let skipped_nan = values.len() - kept.len();
    if kept.is_empty() {
        return None;
    }
    kept.sort_by(f64::total_cmp);
    let q1 = percentile(&kept, 0.25);
    let median = percentile(&kept, 0.5);
    let q3 = percentile(&kept, 0.75);
    let iqr = q3 - q1;
    let lo_fence = if iqr.is_finite() { q1 - 1.5 * iqr } else { f64::NEG_INFINITY };
    let hi_fence = if iqr.is_finite() { q3 + 1.5 * iqr } else { f64::INFINITY };
    let inside = |v: &&f64| **v >= lo_fence && **v <= hi_fence;
    let lo_whisker = kept.iter().find(inside).copied().unwrap_or(q1);
    let hi_whisker = kept.iter().rev().find(inside).copied().unwrap_or(q3);
    let outlier_count = kept.iter().filter(|v| !inside(v)).count();
    Some(BoxSummary {
        count: kept.len(),
        median,
        q1,
        q3,
        lo_whisker,
        hi_whisker,
        outlier_count,
        skipped_nan,
    })
}
