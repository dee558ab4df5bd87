use std::collections::VecDeque;

use super::{
    sample_execution_time, to_nanos, to_secs, ExecProfile, JobRecord, Nanos, SimError, TaskKind,
    TaskSetup, TaskSpec, TaskWindow, WindowStats,
};
use crate::noise::NoiseStream;

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    Released {
        task: usize,
        seq: u64,
        time: Nanos,
        exec: f64,
    },
    /// First dispatch of a job.
    Started {
        task: usize,
        seq: u64,
        time: Nanos,
        period: f64,
    },
    Preempted {
        task: usize,
        seq: u64,
        time: Nanos,
    },
    Resumed {
        task: usize,
        seq: u64,
        time: Nanos,
    },
    Completed(JobRecord),
}

impl SimEvent {
    pub fn time(&self) -> Nanos {
        match self {
            SimEvent::Released { time, .. }
            | SimEvent::Started { time, .. }
            | SimEvent::Preempted { time, .. }
            | SimEvent::Resumed { time, .. } => *time,
            SimEvent::Completed(r) => r.finish,
        }
    }
}

/// A contiguous interval during which one job held the CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slice {
    pub task: usize,
    pub seq: u64,
    pub start: Nanos,
    pub end: Nanos,
}

#[derive(Debug, Clone)]
struct Job {
    seq: u64,
    release: Nanos,
    deadline: Nanos,
    period: f64,
    exec: f64,
    exec_ns: Nanos,
    remaining: Nanos,
    start: Option<Nanos>,
    preemptions: u32,
}

#[derive(Debug, Clone)]
struct TaskRuntime {
    spec: TaskSpec,
    profile: ExecProfile,
    noise: NoiseStream,
    period: f64,
    period_ns: Nanos,
    next_release: Nanos,
    next_seq: u64,
    /// Released, unfinished jobs in release order. Only the head may run.
    queue: VecDeque<Job>,
    misses: u64,
    completed: u64,
    window_exec_sum: f64,
    window_released: u32,
    window_busy: Nanos,
    last_exec: Option<f64>,
}

/// Discrete-event state of one single-CPU simulation.
#[derive(Debug, Clone)]
pub struct SimState {
    now: Nanos,
    tasks: Vec<TaskRuntime>,
    /// Task indices sorted by (priority, index).
    order: Vec<usize>,
    running: Option<usize>,
    running_since: Nanos,
    window_start: Nanos,
    window_length: Option<Nanos>,
    next_window_close: Nanos,
    closed_windows: VecDeque<WindowStats>,
    completed: Vec<JobRecord>,
    keep_records: bool,
    slices: Option<Vec<Slice>>,
}

impl SimState {
    pub fn new(setups: Vec<TaskSetup>) -> Result<Self, SimError> {
        let mut tasks = Vec::with_capacity(setups.len());
        for setup in setups {
            setup.spec.validate()?;
            let period_ns = to_nanos(setup.spec.period);
            if period_ns == 0 {
                return Err(SimError::InvalidTask {
                    task: setup.spec.name.clone(),
                    msg: "period rounds to zero nanoseconds".into(),
                });
            }
            let profile = if setup.profile.is_empty() {
                ExecProfile::constant(setup.spec.mean_exec)
            } else {
                setup.profile
            };
            tasks.push(TaskRuntime {
                period: setup.spec.period,
                period_ns,
                spec: setup.spec,
                profile,
                noise: setup.exec_noise,
                next_release: 0,
                next_seq: 0,
                queue: VecDeque::new(),
                misses: 0,
                completed: 0,
                window_exec_sum: 0.0,
                window_released: 0,
                window_busy: 0,
                last_exec: None,
            });
        }
        let mut order: Vec<usize> = (0..tasks.len()).collect();
        order.sort_by_key(|&i| (tasks[i].spec.priority, i));
        Ok(Self {
            now: 0,
            tasks,
            order,
            running: None,
            running_since: 0,
            window_start: 0,
            window_length: None,
            next_window_close: Nanos::MAX,
            closed_windows: VecDeque::new(),
            completed: Vec::new(),
            keep_records: true,
            slices: None,
        })
    }

    /// Record every execution interval; used by schedule audits.
    pub fn with_slice_log(mut self) -> Self {
        self.slices = Some(Vec::new());
        self
    }

    /// Close a monitoring window every `length` nanoseconds, before any
    /// release that happens at the boundary instant. Closed windows are
    /// collected with [`SimState::pop_window`].
    pub fn with_monitor_window(mut self, length: Nanos) -> Self {
        assert!(length > 0, "window length must be positive");
        self.window_length = Some(length);
        self.next_window_close = self.window_start + length;
        self
    }

    /// Stop retaining completed job records (events are still emitted).
    pub fn without_job_records(mut self) -> Self {
        self.keep_records = false;
        self
    }

    pub fn now(&self) -> Nanos {
        self.now
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn spec(&self, task: usize) -> &TaskSpec {
        &self.tasks[task].spec
    }

    pub fn period(&self, task: usize) -> f64 {
        self.tasks[task].period
    }

    pub fn periods(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.period).collect()
    }

    pub fn misses(&self, task: usize) -> u64 {
        self.tasks[task].misses
    }

    pub fn completed_count(&self, task: usize) -> u64 {
        self.tasks[task].completed
    }

    pub fn pending_jobs(&self, task: usize) -> usize {
        self.tasks[task].queue.len()
    }

    pub fn running(&self) -> Option<usize> {
        self.running
    }

    pub fn completed_jobs(&self) -> &[JobRecord] {
        &self.completed
    }

    pub fn slices(&self) -> Option<&[Slice]> {
        self.slices.as_deref()
    }

    /// Execution of the running job since its last dispatch, not yet in
    /// the slice log.
    pub fn open_slice(&self) -> Option<Slice> {
        let t = self.running?;
        let seq = self.tasks[t].queue.front()?.seq;
        (self.now > self.running_since).then_some(Slice {
            task: t,
            seq,
            start: self.running_since,
            end: self.now,
        })
    }

    /// Mean execution time the profile prescribes for `task` at `t`.
    pub fn mean_exec_at(&self, task: usize, t: Nanos) -> f64 {
        let rt = &self.tasks[task];
        rt.profile.mean_at(t).unwrap_or(rt.spec.mean_exec)
    }

    /// Changes the period of a control task. The new value governs the
    /// deadline and spacing of releases from the next release onwards.
    pub fn set_period(&mut self, task: usize, period: f64) -> Result<(), SimError> {
        let rt = self.tasks.get_mut(task).ok_or(SimError::NoSuchTask(task))?;
        if rt.spec.kind != TaskKind::Control {
            return Err(SimError::ImmutablePeriod {
                task: rt.spec.name.clone(),
                kind: rt.spec.kind,
            });
        }
        if !(period > 0.0 && period.is_finite()) || to_nanos(period) == 0 {
            return Err(SimError::InvalidTask {
                task: rt.spec.name.clone(),
                msg: format!("period {period} must be positive"),
            });
        }
        rt.period = period;
        rt.period_ns = to_nanos(period);
        Ok(())
    }

    /// Time of the next release or completion.
    pub fn next_event_time(&self) -> Nanos {
        let release = self
            .tasks
            .iter()
            .map(|t| t.next_release)
            .min()
            .unwrap_or(Nanos::MAX);
        release.min(self.completion_time().unwrap_or(Nanos::MAX))
    }

    fn completion_time(&self) -> Option<Nanos> {
        self.running
            .map(|t| self.now + self.tasks[t].queue.front().expect("running job").remaining)
    }

    /// Processes every release, preemption and completion up to and
    /// including `until`, returning the events in the order they happened.
    ///
    /// # Panics
    ///
    /// If `until` lies in the past or the event order is corrupted.
    pub fn advance(&mut self, until: Nanos) -> Vec<SimEvent> {
        assert!(until >= self.now, "advance to {until} from {}", self.now);
        let mut events = Vec::new();
        loop {
            let next = self.next_event_time().min(self.next_window_close);
            if next > until {
                self.progress(until);
                break;
            }
            assert!(
                next >= self.now,
                "event at {next} precedes now {}",
                self.now
            );
            self.progress(next);

            if self.completion_time() == Some(self.now) {
                self.complete_running(&mut events);
            }
            if self.next_window_close == self.now {
                let stats = self.take_window();
                self.closed_windows.push_back(stats);
            }
            for i in 0..self.order.len() {
                let task = self.order[i];
                if self.tasks[task].next_release == self.now {
                    self.release(task, &mut events);
                }
            }
            self.dispatch(&mut events);
        }
        events
    }

    fn progress(&mut self, to: Nanos) {
        let dt = to - self.now;
        if let Some(t) = self.running {
            let rt = &mut self.tasks[t];
            let job = rt.queue.front_mut().expect("running job");
            assert!(dt <= job.remaining, "job overran its remaining work");
            job.remaining -= dt;
            rt.window_busy += dt;
        }
        self.now = to;
    }

    fn close_slice(&mut self) {
        if let (Some(t), Some(log)) = (self.running, self.slices.as_mut()) {
            if self.now > self.running_since {
                let seq = self.tasks[t].queue.front().map_or(0, |j| j.seq);
                log.push(Slice {
                    task: t,
                    seq,
                    start: self.running_since,
                    end: self.now,
                });
            }
        }
    }

    fn complete_running(&mut self, events: &mut Vec<SimEvent>) {
        self.close_slice();
        let t = self.running.take().expect("running job");
        let now = self.now;
        let rt = &mut self.tasks[t];
        let job = rt.queue.pop_front().expect("running job");
        let missed = now > job.deadline;
        if missed {
            rt.misses += 1;
        }
        rt.completed += 1;
        let record = JobRecord {
            task: t,
            seq: job.seq,
            release: job.release,
            deadline: job.deadline,
            exec: job.exec,
            exec_ns: job.exec_ns,
            period: job.period,
            start: job.start.expect("completed job was started"),
            finish: now,
            preemptions: job.preemptions,
            missed,
        };
        if self.keep_records {
            self.completed.push(record.clone());
        }
        events.push(SimEvent::Completed(record));
    }

    fn release(&mut self, task: usize, events: &mut Vec<SimEvent>) {
        let now = self.now;
        let mean = self.mean_exec_at(task, now);
        let rt = &mut self.tasks[task];
        let exec = sample_execution_time(mean, &mut rt.noise);
        let exec_ns = to_nanos(exec).max(1);
        let seq = rt.next_seq;
        rt.next_seq += 1;
        rt.queue.push_back(Job {
            seq,
            release: now,
            deadline: now + rt.period_ns,
            period: rt.period,
            exec,
            exec_ns,
            remaining: exec_ns,
            start: None,
            preemptions: 0,
        });
        rt.next_release = now + rt.period_ns;
        rt.window_exec_sum += exec;
        rt.window_released += 1;
        rt.last_exec = Some(exec);
        events.push(SimEvent::Released {
            task,
            seq,
            time: now,
            exec,
        });
    }

    fn highest_ready(&self) -> Option<usize> {
        // Equal priorities fall back to the earlier head release.
        self.order
            .iter()
            .copied()
            .filter(|&t| !self.tasks[t].queue.is_empty())
            .min_by_key(|&t| {
                let head = self.tasks[t].queue.front().expect("non-empty");
                (self.tasks[t].spec.priority, head.release, t)
            })
    }

    fn dispatch(&mut self, events: &mut Vec<SimEvent>) {
        let best = self.highest_ready();
        if best == self.running {
            return;
        }
        let now = self.now;
        if let Some(prev) = self.running {
            self.close_slice();
            let job = self.tasks[prev].queue.front_mut().expect("running job");
            job.preemptions += 1;
            events.push(SimEvent::Preempted {
                task: prev,
                seq: job.seq,
                time: now,
            });
        }
        self.running = best;
        self.running_since = now;
        if let Some(t) = best {
            let job = self.tasks[t].queue.front_mut().expect("ready job");
            let seq = job.seq;
            if job.start.is_none() {
                job.start = Some(now);
                let period = job.period;
                events.push(SimEvent::Started {
                    task: t,
                    seq,
                    time: now,
                    period,
                });
            } else {
                events.push(SimEvent::Resumed {
                    task: t,
                    seq,
                    time: now,
                });
            }
        }
    }

    /// Closes the current monitoring window at the current time and starts a
    /// new one.
    pub fn take_window(&mut self) -> WindowStats {
        let stats = WindowStats {
            start: self.window_start,
            end: self.now,
            tasks: self
                .tasks
                .iter()
                .map(|rt| TaskWindow {
                    kind: rt.spec.kind,
                    period: rt.period,
                    mean_exec: (rt.window_released > 0)
                        .then(|| rt.window_exec_sum / f64::from(rt.window_released)),
                    last_exec: rt.last_exec,
                    released: rt.window_released,
                    busy: rt.window_busy,
                })
                .collect(),
        };
        for rt in &mut self.tasks {
            rt.window_exec_sum = 0.0;
            rt.window_released = 0;
            rt.window_busy = 0;
        }
        self.window_start = self.now;
        if let Some(len) = self.window_length {
            self.next_window_close = self.now + len;
        }
        stats
    }

    /// Most recently closed monitoring window, discarding any older ones.
    pub fn pop_window(&mut self) -> Option<WindowStats> {
        let latest = self.closed_windows.pop_back();
        self.closed_windows.clear();
        latest
    }

    pub fn now_secs(&self) -> f64 {
        to_secs(self.now)
    }
}
