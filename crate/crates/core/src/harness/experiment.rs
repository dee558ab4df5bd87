//! Co-simulation of the task set, the two robot axes and the period manager.
//!
//! A control job samples its axis when it first gets the CPU and applies the
//! new command when it completes, so preemption shows up as actuation delay.
//! A scheduler job measures the last monitoring window when it starts and
//! installs the new control periods when it completes.

use std::time::Instant;

use thiserror::Error;

use super::scenario::{Axis, ScenarioConfig, ScenarioError, SCHEDULER_TASK_NAME};
use super::trace::{summarize, RunSummary, Trace, TraceRecord};
use crate::control::{plant_step, tracking_error, PidState, PlantParams, PlantState};
use crate::feedback::{
    apply_periods, control_demand, ideal_eta, open_loop_step, FeedbackError, FfsOutput, FfsState,
    LoopPeriod, SchedulerMode,
};
use crate::fuzzy::LookupTable;
use crate::noise::{stream_id, NoiseStream};
use crate::rt::{
    measure_utilization, to_nanos, to_secs, ExecProfile, JobRecord, Nanos, SimError, SimEvent,
    SimState, TaskKind, TaskSetup, TaskSpec, UtilizationSample,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
}

/// One invocation of the period manager.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerDecision {
    /// Start of the scheduler job, seconds.
    pub time: f64,
    /// Absent for the invocation at t = 0, which has no past window.
    pub sample: Option<UtilizationSample>,
    /// Fuzzy mode only.
    pub ffs: Option<FfsOutput>,
    /// `None` when the manager had nothing to act on.
    pub eta: Option<f64>,
    /// Ideal mode only: utilization the new periods would give before any
    /// period bound is applied.
    pub predicted: Option<f64>,
    /// Control periods installed at job completion, in control-task order.
    /// Empty if the job did not complete within the horizon.
    pub periods: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub mode: SchedulerMode,
    pub seed: u64,
    pub trace: Trace,
    pub summary: RunSummary,
    pub decisions: Vec<SchedulerDecision>,
    pub jobs: Vec<JobRecord>,
    /// Simulated task names; the scheduler task is last.
    pub sim_tasks: Vec<String>,
}

struct AxisLoop {
    axis: Axis,
    task: usize,
    plant: PlantState,
    synced_at: f64,
    pid: PidState,
    pending: Option<f64>,
}

impl AxisLoop {
    fn sync(&mut self, params: &PlantParams, t: f64) {
        let dt = t - self.synced_at;
        if dt > 0.0 {
            self.plant = plant_step(params, self.plant, self.plant.u, dt);
            self.synced_at = t;
        }
    }

    fn pick(&self, p: (f64, f64)) -> f64 {
        match self.axis {
            Axis::X => p.0,
            Axis::Y => p.1,
        }
    }
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    sim: SimState,
    scheduler: usize,
    /// Indices of the configured tasks that are control loops.
    control: Vec<usize>,
    axes: Vec<AxisLoop>,
    ffs: Option<FfsState>,
    measurement: NoiseStream,
    trace: Trace,
    decisions: Vec<SchedulerDecision>,
    /// Decision made by the running scheduler job, applied when it completes.
    pending_decision: Option<usize>,
}

/// Runs the scenario in the mode and with the seed it specifies, using the
/// shipped look-up table for fuzzy mode.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<Experiment, RunError> {
    run_experiment_with_table(cfg, LookupTable::golden())
}

pub fn run_experiment_with_table(
    cfg: &ScenarioConfig,
    table: LookupTable,
) -> Result<Experiment, RunError> {
    let started = Instant::now();
    cfg.validate()?;
    let mut run = Run::new(cfg, table)?;
    run.execute()?;
    let mut summary = summarize(&run.trace).expect("a run always records its start and end");
    summary.wall_clock_s = Some(started.elapsed().as_secs_f64());
    let mut sim_tasks: Vec<String> = cfg.tasks.iter().map(|t| t.name.clone()).collect();
    sim_tasks.push(SCHEDULER_TASK_NAME.to_string());
    Ok(Experiment {
        mode: cfg.scheduler.mode,
        seed: cfg.seed,
        trace: run.trace,
        summary,
        decisions: run.decisions,
        jobs: run.sim.completed_jobs().to_vec(),
        sim_tasks,
    })
}

fn build_setups(cfg: &ScenarioConfig) -> Vec<TaskSetup> {
    let mut setups: Vec<TaskSetup> = cfg
        .tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let steps: Vec<(f64, f64)> = cfg
                .segments
                .iter()
                .map(|s| (s.start.max(0.0), s.means[&t.name]))
                .collect();
            let spec = TaskSpec {
                name: t.name.clone(),
                kind: t.kind,
                period: t.period,
                mean_exec: steps[0].1,
                priority: t.priority,
                period_bounds: t.period_bounds,
            };
            let noise = NoiseStream::new(
                cfg.seed,
                stream_id::EXEC_BASE + i as u64,
                cfg.noise.exec_variance,
            );
            TaskSetup::new(spec, ExecProfile::from_steps(steps), noise)
        })
        .collect();
    setups.push(TaskSetup::fixed(TaskSpec {
        name: SCHEDULER_TASK_NAME.to_string(),
        kind: TaskKind::Scheduler,
        period: cfg.scheduler.period,
        mean_exec: cfg.scheduler.exec_time,
        priority: cfg.scheduler.priority,
        period_bounds: None,
    }));
    setups
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ScenarioConfig, table: LookupTable) -> Result<Self, RunError> {
        let sim =
            SimState::new(build_setups(cfg))?.with_monitor_window(to_nanos(cfg.scheduler.period));
        let control: Vec<usize> = cfg
            .tasks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TaskKind::Control)
            .map(|(i, _)| i)
            .collect();
        let axes = [Axis::X, Axis::Y]
            .into_iter()
            .map(|axis| {
                let task = cfg
                    .control_task(axis)
                    .expect("validated scenario has both axes");
                AxisLoop {
                    axis,
                    task,
                    plant: PlantState::default(),
                    synced_at: 0.0,
                    pid: PidState::new(cfg.pid, cfg.tasks[task].period),
                    pending: None,
                }
            })
            .collect();
        let s = &cfg.scheduler;
        let ffs = match s.mode {
            SchedulerMode::Fuzzy => Some(FfsState::new(
                s.desired_utilization,
                s.ge,
                s.gec,
                s.grf,
                table,
            )?),
            _ => None,
        };
        let measurement = NoiseStream::new(
            cfg.seed,
            stream_id::MEASUREMENT,
            cfg.noise.measurement_std * cfg.noise.measurement_std,
        );
        Ok(Self {
            cfg,
            sim,
            scheduler: cfg.tasks.len(),
            control,
            axes,
            ffs,
            measurement,
            trace: Trace {
                task_names: cfg.tasks.iter().map(|t| t.name.clone()).collect(),
                records: Vec::new(),
            },
            decisions: Vec::new(),
            pending_decision: None,
        })
    }

    fn execute(&mut self) -> Result<(), RunError> {
        let horizon = to_nanos(self.cfg.horizon);
        self.record(0.0, None, None);
        loop {
            let next = self.sim.next_event_time();
            for event in self.sim.advance(next.min(horizon)) {
                self.handle(event)?;
            }
            if next >= horizon {
                break;
            }
        }
        let end = to_secs(horizon);
        self.record(end, None, None);
        Ok(())
    }

    fn handle(&mut self, event: SimEvent) -> Result<(), RunError> {
        match event {
            SimEvent::Started {
                task, time, period, ..
            } => {
                if task == self.scheduler {
                    self.scheduler_started(time)?;
                } else if let Some(a) = self.axes.iter().position(|a| a.task == task) {
                    self.control_started(a, to_secs(time), period);
                }
            }
            SimEvent::Completed(job) => {
                if job.task == self.scheduler {
                    self.scheduler_completed(to_secs(job.finish))?;
                } else if let Some(a) = self.axes.iter().position(|a| a.task == job.task) {
                    self.control_completed(a, to_secs(job.finish));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn control_started(&mut self, a: usize, t: f64, period: f64) {
        let params = self.cfg.plant;
        let reference = self.cfg.reference.at(t);
        let axis = &mut self.axes[a];
        axis.sync(&params, t);
        axis.pid.set_period(period);
        let r = axis.pick(reference);
        axis.pending = Some(axis.pid.compute(r, axis.plant.output()));
    }

    fn control_completed(&mut self, a: usize, t: f64) {
        let params = self.cfg.plant;
        for axis in &mut self.axes {
            axis.sync(&params, t);
        }
        let axis = &mut self.axes[a];
        if let Some(u) = axis.pending.take() {
            axis.plant.u = u;
        }
        self.record(t, None, None);
    }

    fn scheduler_started(&mut self, time: Nanos) -> Result<(), RunError> {
        let t = to_secs(time);
        let sample = self
            .sim
            .pop_window()
            .map(|w| measure_utilization(&w, &mut self.measurement));
        let mut ffs_out = None;
        let mut predicted = None;
        let eta = match self.cfg.scheduler.mode {
            SchedulerMode::OpenLoop => sample.map(|_| open_loop_step()),
            SchedulerMode::Fuzzy => match (sample, self.ffs.as_mut()) {
                (Some(s), Some(ffs)) => {
                    let out = ffs.step(s.u_hat);
                    ffs_out = Some(out);
                    Some(out.eta)
                }
                _ => None,
            },
            SchedulerMode::Ideal => {
                let (eta, u) = self.ideal_eta(time)?;
                predicted = Some(u);
                Some(eta)
            }
        };
        self.decisions.push(SchedulerDecision {
            time: t,
            sample,
            ffs: ffs_out,
            eta,
            predicted,
            periods: Vec::new(),
            clamped: false,
        });
        self.pending_decision = eta.map(|_| self.decisions.len() - 1);
        if sample.is_some() || eta.is_some() {
            self.record(t, sample.map(|s| s.u_hat), eta);
        }
        Ok(())
    }

    /// Exact rescale from the prescribed mean execution times in force now,
    /// with the utilization it predicts for the unclamped periods.
    fn ideal_eta(&self, time: Nanos) -> Result<(f64, f64), RunError> {
        let mut c = Vec::new();
        let mut h = Vec::new();
        let mut others = 0.0;
        for (i, t) in self.cfg.tasks.iter().enumerate() {
            let mean = self.sim.mean_exec_at(i, time);
            match t.kind {
                TaskKind::Control => {
                    c.push(mean);
                    h.push(self.sim.period(i));
                }
                _ => others += mean / self.sim.period(i),
            }
        }
        let eta = ideal_eta(&c, &h, others, self.cfg.scheduler.desired_utilization)?;
        let scaled: Vec<f64> = h.iter().map(|h| eta * h).collect();
        Ok((eta, others + control_demand(&c, &scaled)))
    }

    fn scheduler_completed(&mut self, _t: f64) -> Result<(), RunError> {
        let Some(idx) = self.pending_decision.take() else {
            return Ok(());
        };
        let eta = self.decisions[idx]
            .eta
            .expect("pending decisions carry eta");
        let loops: Vec<LoopPeriod> = self
            .control
            .iter()
            .map(|&i| {
                let (min, max) = self.cfg.tasks[i].period_bounds.expect("control bounds");
                LoopPeriod {
                    period: self.sim.period(i),
                    min,
                    max,
                }
            })
            .collect();
        let decision = apply_periods(eta, &loops);
        for (&task, &h) in self.control.iter().zip(&decision.periods) {
            self.sim.set_period(task, h)?;
        }
        let d = &mut self.decisions[idx];
        d.clamped = decision.any_clamped();
        d.periods = decision.periods;
        Ok(())
    }

    fn record(&mut self, t: f64, u_hat: Option<f64>, eta: Option<f64>) {
        let params = self.cfg.plant;
        for axis in &mut self.axes {
            axis.sync(&params, t);
        }
        let x = &self.axes[0].plant;
        let y = &self.axes[1].plant;
        let actual = (x.output(), y.output());
        let reference = self.cfg.reference.at(t);
        let n = self.cfg.tasks.len();
        self.trace.records.push(TraceRecord {
            time: t,
            periods: (0..n).map(|i| self.sim.period(i)).collect(),
            u_hat,
            eta,
            actual,
            reference,
            error: tracking_error(actual, reference),
            misses: (0..n).map(|i| self.sim.misses(i)).collect(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mode: SchedulerMode) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default().with_mode(mode);
        cfg.horizon = 0.5;
        cfg
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = short(SchedulerMode::Fuzzy);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.summary.same_outcome(&b.summary));
    }

    #[test]
    fn trace_times_are_ordered_and_bounded() {
        let exp = run_experiment(&short(SchedulerMode::Ideal)).unwrap();
        let recs = &exp.trace.records;
        assert_eq!(recs.first().unwrap().time, 0.0);
        assert_eq!(recs.last().unwrap().time, 0.5);
        assert!(recs.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn open_loop_never_changes_periods() {
        let exp = run_experiment(&short(SchedulerMode::OpenLoop)).unwrap();
        for r in &exp.trace.records {
            assert_eq!(r.periods, vec![0.003, 0.004, 0.005]);
        }
        assert!(exp.decisions.iter().skip(1).all(|d| d.eta == Some(1.0)));
    }

    #[test]
    fn one_utilization_record_per_window() {
        let exp = run_experiment(&short(SchedulerMode::Fuzzy)).unwrap();
        let n = exp
            .trace
            .records
            .iter()
            .filter(|r| r.u_hat.is_some())
            .count();
        // Invocations at 20, 40, ..., 500 ms.
        assert_eq!(n, 25);
    }

    #[test]
    fn ideal_hits_the_target_without_noise() {
        let cfg = short(SchedulerMode::Ideal).noise_free();
        let exp = run_experiment(&cfg).unwrap();
        for d in exp.decisions.iter().skip(1) {
            let u = d.sample.unwrap().u_hat;
            assert!((u - 0.85).abs() < 1e-9, "t = {}: {u}", d.time);
        }
    }
}
