use crate::noise::NoiseStream;

use super::{Nanos, TaskKind};

/// What one task did during a monitoring window.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskWindow {
    pub kind: TaskKind,
    /// Period in force when the window closed, seconds.
    pub period: f64,
    /// Mean sampled execution time of jobs released in the window.
    pub mean_exec: Option<f64>,
    /// Most recent sampled execution time of any job of this task.
    pub last_exec: Option<f64>,
    pub released: u32,
    /// CPU time consumed in the window.
    pub busy: Nanos,
}

impl TaskWindow {
    /// Execution time used for the estimate: the window mean, else the last
    /// sample seen before the window.
    pub fn exec_estimate(&self) -> Option<f64> {
        self.mean_exec.or(self.last_exec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub start: Nanos,
    pub end: Nanos,
    pub tasks: Vec<TaskWindow>,
}

impl WindowStats {
    pub fn busy_total(&self) -> Nanos {
        self.tasks.iter().map(|t| t.busy).sum()
    }

    /// Sum of `c / h` over every task except the feedback scheduler itself.
    pub fn demand(&self) -> f64 {
        self.tasks
            .iter()
            .filter(|t| t.kind != TaskKind::Scheduler)
            .filter_map(|t| t.exec_estimate().map(|c| c / t.period))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilizationSample {
    pub window_start: f64,
    pub window_end: f64,
    /// Noise-free, unclamped `sum(c / h)`.
    pub demand: f64,
    /// Measured utilization: demand plus measurement noise, clamped to [0, 1].
    pub u_hat: f64,
}

/// Adds one measurement-noise sample to the window demand and clamps.
pub fn measure_utilization(stats: &WindowStats, noise: &mut NoiseStream) -> UtilizationSample {
    let demand = stats.demand();
    let u_hat = (demand + noise.sample()).clamp(0.0, 1.0);
    UtilizationSample {
        window_start: super::to_secs(stats.start),
        window_end: super::to_secs(stats.end),
        demand,
        u_hat,
    }
}
