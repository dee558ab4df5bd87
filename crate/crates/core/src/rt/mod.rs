//! Fixed-priority preemptive scheduling of periodic tasks on one CPU.
//!
//! Time is kept in integer nanoseconds so event ordering is exact and a run
//! replays bit-for-bit. Periods and execution times are also carried as
//! `f64` seconds, which is what the utilization arithmetic uses.

mod kernel;
mod monitor;

pub use kernel::{SimEvent, SimState, Slice};
pub use monitor::{measure_utilization, TaskWindow, UtilizationSample, WindowStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseStream;

pub type Nanos = u64;

pub const NANOS_PER_SEC: f64 = 1e9;

pub fn to_nanos(seconds: f64) -> Nanos {
    assert!(
        seconds >= 0.0 && seconds.is_finite(),
        "invalid time {seconds}"
    );
    (seconds * NANOS_PER_SEC).round() as Nanos
}

pub fn to_secs(ns: Nanos) -> f64 {
    ns as f64 / NANOS_PER_SEC
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Control,
    NonControl,
    Scheduler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub kind: TaskKind,
    /// Seconds.
    pub period: f64,
    /// Mean execution time in seconds, used outside any schedule segment.
    pub mean_exec: f64,
    /// Lower number runs first.
    pub priority: u32,
    /// `[h_min, h_max]` in seconds; control tasks only.
    pub period_bounds: Option<(f64, f64)>,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| {
            Err(SimError::InvalidTask {
                task: self.name.clone(),
                msg,
            })
        };
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period {} must be positive", self.period));
        }
        if !(self.mean_exec > 0.0 && self.mean_exec.is_finite()) {
            return bad(format!(
                "mean execution time {} must be positive",
                self.mean_exec
            ));
        }
        match (self.kind, self.period_bounds) {
            (TaskKind::Control, Some((lo, hi))) => {
                if !(lo > 0.0 && lo <= self.period && self.period <= hi) {
                    return bad(format!(
                        "period {} outside bounds [{lo}, {hi}]",
                        self.period
                    ));
                }
            }
            (TaskKind::Control, None) => return bad("control task needs period bounds".into()),
            (_, Some(_)) => return bad("only control tasks have period bounds".into()),
            (_, None) => {}
        }
        Ok(())
    }
}

/// Piecewise-constant mean execution time: `(start, mean)` steps in seconds,
/// sorted by start. Times before the first step use the first mean.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecProfile {
    steps: Vec<(Nanos, f64)>,
}

impl ExecProfile {
    pub fn constant(mean: f64) -> Self {
        Self {
            steps: vec![(0, mean)],
        }
    }

    pub fn from_steps(steps: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut steps: Vec<(Nanos, f64)> =
            steps.into_iter().map(|(t, m)| (to_nanos(t), m)).collect();
        steps.sort_by_key(|s| s.0);
        Self { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn mean_at(&self, t: Nanos) -> Option<f64> {
        let idx = self.steps.partition_point(|&(start, _)| start <= t);
        self.steps.get(idx.saturating_sub(1)).map(|s| s.1)
    }
}

/// `(1 + eps) * mean`, floored at 1% of the mean.
pub fn exec_time_with_noise(mean: f64, eps: f64) -> f64 {
    ((1.0 + eps) * mean).max(EXEC_FLOOR_FRACTION * mean)
}

pub const EXEC_FLOOR_FRACTION: f64 = 0.01;

pub fn sample_execution_time(mean: f64, noise: &mut NoiseStream) -> f64 {
    exec_time_with_noise(mean, noise.sample())
}

/// Per-task configuration handed to [`SimState::new`].
#[derive(Debug, Clone)]
pub struct TaskSetup {
    pub spec: TaskSpec,
    pub profile: ExecProfile,
    pub exec_noise: NoiseStream,
}

impl TaskSetup {
    pub fn new(spec: TaskSpec, profile: ExecProfile, exec_noise: NoiseStream) -> Self {
        Self {
            spec,
            profile,
            exec_noise,
        }
    }

    /// Constant mean execution time, no noise.
    pub fn fixed(spec: TaskSpec) -> Self {
        let profile = ExecProfile::constant(spec.mean_exec);
        Self {
            spec,
            profile,
            exec_noise: NoiseStream::silent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub task: usize,
    pub seq: u64,
    pub release: Nanos,
    pub deadline: Nanos,
    /// Sampled execution time in seconds.
    pub exec: f64,
    pub exec_ns: Nanos,
    /// Period in force when the job was released, seconds.
    pub period: f64,
    pub start: Nanos,
    pub finish: Nanos,
    pub preemptions: u32,
    pub missed: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("task `{task}`: {msg}")]
    InvalidTask { task: String, msg: String },
    #[error("task index {0} does not exist")]
    NoSuchTask(usize),
    #[error("period of {kind:?} task `{task}` is fixed")]
    ImmutablePeriod { task: String, kind: TaskKind },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_exec_is_mean() {
        assert_eq!(exec_time_with_noise(0.0012, 0.0), 0.0012);
        assert_eq!(
            sample_execution_time(0.0012, &mut NoiseStream::silent()),
            0.0012
        );
    }

    #[test]
    fn exec_noise_arithmetic() {
        assert!((exec_time_with_noise(1.2e-3, -0.1) - 1.08e-3).abs() < 1e-18);
    }

    #[test]
    fn exec_floor() {
        assert_eq!(exec_time_with_noise(1.0e-3, -5.0), 1.0e-5);
    }

    #[test]
    fn exec_sample_mean_converges() {
        let mut noise = NoiseStream::new(2024, 16, 0.01);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_execution_time(1.0e-3, &mut noise))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0e-3).abs() < 1.0e-5, "mean {mean}");
    }

    #[test]
    fn profile_steps() {
        let p = ExecProfile::from_steps([(1.0, 2.0), (0.0, 1.0), (3.0, 1.5)]);
        assert_eq!(p.mean_at(0), Some(1.0));
        assert_eq!(p.mean_at(to_nanos(0.999_999)), Some(1.0));
        assert_eq!(p.mean_at(to_nanos(1.0)), Some(2.0));
        assert_eq!(p.mean_at(to_nanos(3.5)), Some(1.5));
        assert_eq!(ExecProfile::default().mean_at(0), None);
    }

    #[test]
    fn task_validation() {
        let mut t = TaskSpec {
            name: "tau1".into(),
            kind: TaskKind::Control,
            period: 0.003,
            mean_exec: 0.0006,
            priority: 2,
            period_bounds: Some((0.001, 0.007)),
        };
        assert!(t.validate().is_ok());
        t.period = 0.008;
        assert!(t.validate().is_err());
        t.period = 0.003;
        t.kind = TaskKind::NonControl;
        assert!(t.validate().is_err());
        t.period_bounds = None;
        assert!(t.validate().is_ok());
        t.mean_exec = 0.0;
        assert!(t.validate().is_err());
    }
}
