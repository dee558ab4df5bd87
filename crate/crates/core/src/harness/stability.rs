//! Closed-loop stability verdict for a finished run.

use super::trace::Trace;

/// Tracking error above which a run counts as unbounded, metres. A quarter
/// of the reference radius.
pub const ERROR_BOUND_M: f64 = 0.25;

/// Number of equal bins the final second is split into when looking for
/// sustained error growth.
pub const GROWTH_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Stability {
    pub max_error: f64,
    /// Every tracking error is finite and at most [`ERROR_BOUND_M`].
    pub bounded: bool,
    /// Peak error in each bin of the final second. Bins without records
    /// repeat the previous peak.
    pub final_second_peaks: Vec<f64>,
    /// Each bin's peak strictly exceeds the previous one.
    pub monotone_growth: bool,
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        self.bounded && !self.monotone_growth
    }
}

pub fn assess_stability(trace: &Trace) -> Stability {
    let recs = &trace.records;
    let max_error = recs.iter().map(|r| r.error).fold(0.0, f64::max);
    let bounded = recs
        .iter()
        .all(|r| r.error.is_finite() && r.error <= ERROR_BOUND_M);

    let end = recs.last().map_or(0.0, |r| r.time);
    let start = (end - 1.0).max(0.0);
    let width = (end - start) / GROWTH_BINS as f64;
    let mut peaks = vec![f64::NAN; GROWTH_BINS];
    if width > 0.0 {
        for r in recs.iter().filter(|r| r.time >= start) {
            let bin = (((r.time - start) / width) as usize).min(GROWTH_BINS - 1);
            // NaN-aware max: any NaN error marks the bin as NaN.
            peaks[bin] = if peaks[bin].is_nan() {
                r.error
            } else {
                peaks[bin].max(r.error)
            };
        }
    }
    for i in 1..peaks.len() {
        if peaks[i].is_nan() {
            peaks[i] = peaks[i - 1];
        }
    }
    let monotone_growth = width > 0.0 && peaks.windows(2).all(|w| w[1] > w[0]);
    Stability {
        max_error,
        bounded,
        final_second_peaks: peaks,
        monotone_growth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TraceRecord;

    fn trace(errors: impl Fn(f64) -> f64) -> Trace {
        let records = (0..=400)
            .map(|i| {
                let t = i as f64 * 0.01;
                TraceRecord {
                    time: t,
                    periods: vec![],
                    u_hat: None,
                    eta: None,
                    actual: (0.0, 0.0),
                    reference: (0.0, 0.0),
                    error: errors(t),
                    misses: vec![],
                }
            })
            .collect();
        Trace {
            task_names: vec![],
            records,
        }
    }

    #[test]
    fn flat_error_is_stable() {
        let s = assess_stability(&trace(|_| 0.01));
        assert!(s.is_stable());
        assert!(!s.monotone_growth);
    }

    #[test]
    fn exponential_growth_is_flagged() {
        let s = assess_stability(&trace(|t| 1e-6 * (3.0 * t).exp()));
        assert!(s.bounded);
        assert!(s.monotone_growth);
        assert!(!s.is_stable());
    }

    #[test]
    fn large_or_nan_error_is_unbounded() {
        assert!(!assess_stability(&trace(|t| if t > 2.0 { 0.5 } else { 0.0 })).bounded);
        assert!(!assess_stability(&trace(|t| if t > 2.0 { f64::NAN } else { 0.0 })).bounded);
    }

    #[test]
    fn oscillation_is_not_growth() {
        let s = assess_stability(&trace(|t| 0.01 + 0.005 * (40.0 * t).sin()));
        assert!(s.is_stable());
    }
}
