//! Scenario documents.
//!
//! A scenario is a TOML document. Every key is optional; anything left out
//! takes the case-study default. `[[task]]` and `[[segment]]` arrays, when
//! present, replace the default task set and execution-time schedule as a
//! whole. See `docs/scenario-format.md` for the full grammar.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

use crate::control::{PidGains, PlantParams, ReferencePath};
use crate::feedback::SchedulerMode;
use crate::rt::TaskKind;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("invalid scenario: {0}")]
    Semantic(String),
}

fn semantic<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Semantic(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub name: String,
    pub kind: TaskKind,
    /// Control tasks only.
    pub axis: Option<Axis>,
    /// Nominal period, seconds.
    pub period: f64,
    pub priority: u32,
    /// `[h_min, h_max]`, control tasks only.
    pub period_bounds: Option<(f64, f64)>,
}

/// Mean execution times in force on `[start, end)`, keyed by task name.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecSegment {
    pub start: f64,
    pub end: f64,
    pub means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    pub mode: SchedulerMode,
    /// U_R.
    pub desired_utilization: f64,
    /// T_FS, seconds.
    pub period: f64,
    pub exec_time: f64,
    pub priority: u32,
    pub ge: f64,
    pub gec: f64,
    pub grf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Variance of the relative execution-time noise.
    pub exec_variance: f64,
    /// Standard deviation `r` of the utilization measurement noise.
    pub measurement_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub tasks: Vec<TaskConfig>,
    pub segments: Vec<ExecSegment>,
    pub plant: PlantParams,
    pub pid: PidGains,
    pub reference: ReferencePath,
    pub scheduler: SchedulerConfig,
    pub noise: NoiseConfig,
    pub horizon: f64,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 1;
/// Name of the feedback scheduler task in the simulated task set.
pub const SCHEDULER_TASK_NAME: &str = "scheduler";
pub const DEFAULT_H_MIN: f64 = 0.001;
pub const DEFAULT_H_MAX: f64 = 0.007;

impl Default for ScenarioConfig {
    /// The mobile-robot case study: two control loops at 3 and 4 ms, one
    /// non-control task at 5 ms, a 20 ms fuzzy scheduler targeting 85%.
    fn default() -> Self {
        let control = |name: &str, axis, period, priority| TaskConfig {
            name: name.into(),
            kind: TaskKind::Control,
            axis: Some(axis),
            period,
            priority,
            period_bounds: Some((DEFAULT_H_MIN, DEFAULT_H_MAX)),
        };
        let tasks = vec![
            control("tau1", Axis::X, 0.003, 2),
            control("tau2", Axis::Y, 0.004, 3),
            TaskConfig {
                name: "tau3".into(),
                kind: TaskKind::NonControl,
                axis: None,
                period: 0.005,
                priority: 1,
                period_bounds: None,
            },
        ];
        let table = [
            (0.0, 1.0, [0.6e-3, 0.4e-3, 1.0e-3]),
            (1.0, 2.0, [1.2e-3, 0.4e-3, 2.0e-3]),
            (2.0, 3.0, [1.2e-3, 1.2e-3, 2.0e-3]),
            (3.0, 4.0, [1.2e-3, 1.2e-3, 1.5e-3]),
        ];
        let segments = table
            .iter()
            .map(|&(start, end, means)| ExecSegment {
                start,
                end,
                means: ["tau1", "tau2", "tau3"]
                    .iter()
                    .zip(means)
                    .map(|(n, m)| (n.to_string(), m))
                    .collect(),
            })
            .collect();
        Self {
            tasks,
            segments,
            plant: PlantParams::default(),
            pid: PidGains::default(),
            reference: ReferencePath::default(),
            scheduler: SchedulerConfig {
                mode: SchedulerMode::Fuzzy,
                desired_utilization: 0.85,
                period: 0.020,
                exec_time: 0.0001,
                priority: 0,
                ge: 20.0,
                gec: 20.0,
                grf: 1.0 / 14.0,
            },
            noise: NoiseConfig {
                exec_variance: 0.01,
                measurement_std: 0.0,
            },
            horizon: 4.0,
            seed: DEFAULT_SEED,
        }
    }
}

impl ScenarioConfig {
    pub fn with_mode(mut self, mode: SchedulerMode) -> Self {
        self.scheduler.mode = mode;
        self
    }

    /// Disables both execution-time and measurement noise.
    pub fn noise_free(mut self) -> Self {
        self.noise.exec_variance = 0.0;
        self.noise.measurement_std = 0.0;
        self
    }

    pub fn control_task(&self, axis: Axis) -> Option<usize> {
        self.tasks.iter().position(|t| t.axis == Some(axis))
    }

    /// Mean execution time of `task` at time `t`, from the segment covering it.
    pub fn mean_exec_at(&self, task: &str, t: f64) -> Option<f64> {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or_else(|| self.segments.last())
            .and_then(|s| s.means.get(task).copied())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return semantic(format!("horizon {} must be positive", self.horizon));
        }
        self.validate_tasks()?;
        self.validate_segments()?;
        let s = &self.scheduler;
        if !(s.desired_utilization > 0.0 && s.desired_utilization < 1.0) {
            return semantic(format!(
                "desired utilization {} must lie in (0, 1)",
                s.desired_utilization
            ));
        }
        if !(s.period > 0.0 && s.exec_time > 0.0) {
            return semantic("scheduler period and execution time must be positive");
        }
        if s.exec_time >= s.period {
            return semantic("scheduler execution time must be shorter than its period");
        }
        if !(s.ge > 0.0 && s.gec > 0.0 && s.grf > 0.0) {
            return semantic("fuzzy scaling gains must be positive");
        }
        if s.grf * 7.0 > 0.5 + 1e-12 {
            return semantic(format!("grf {} lets eta leave [0.5, 1.5]", s.grf));
        }
        let n = &self.noise;
        if !(n.exec_variance >= 0.0 && n.exec_variance.is_finite())
            || !(n.measurement_std >= 0.0 && n.measurement_std.is_finite())
        {
            return semantic("noise parameters must be finite and non-negative");
        }
        if !(self.reference.duration > 0.0) {
            return semantic("reference duration must be positive");
        }
        let p = &self.plant;
        if !(p.inertia > 0.0 && p.gain.is_finite() && p.damping >= 0.0) {
            return semantic("plant needs positive inertia and non-negative damping");
        }
        let g = &self.pid;
        if [g.kp, g.ki, g.kd, g.n]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return semantic("PID gains must be finite and non-negative");
        }
        Ok(())
    }

    fn validate_tasks(&self) -> Result<(), ScenarioError> {
        let mut names = BTreeSet::new();
        let mut priorities = BTreeSet::from([self.scheduler.priority]);
        let mut axes = BTreeSet::new();
        for t in &self.tasks {
            if t.name.is_empty() || t.name.contains(|c: char| c == ',' || c.is_whitespace()) {
                return semantic(format!(
                    "task name `{}` must be non-empty without commas or spaces",
                    t.name
                ));
            }
            if t.name == SCHEDULER_TASK_NAME {
                return semantic(format!("task name `{SCHEDULER_TASK_NAME}` is reserved"));
            }
            if !names.insert(t.name.as_str()) {
                return semantic(format!("duplicate task name `{}`", t.name));
            }
            if !priorities.insert(t.priority) {
                return semantic(format!("task `{}` reuses priority {}", t.name, t.priority));
            }
            if !(t.period > 0.0 && t.period.is_finite()) {
                return semantic(format!("task `{}` period must be positive", t.name));
            }
            match t.kind {
                TaskKind::Control => {
                    let Some(axis) = t.axis else {
                        return semantic(format!("control task `{}` needs an axis", t.name));
                    };
                    if !axes.insert(axis) {
                        return semantic(format!("axis {axis:?} has two control tasks"));
                    }
                    let Some((lo, hi)) = t.period_bounds else {
                        return semantic(format!("control task `{}` needs period bounds", t.name));
                    };
                    if !(lo > 0.0 && lo <= t.period && t.period <= hi) {
                        return semantic(format!(
                            "task `{}` violates h_min <= period <= h_max",
                            t.name
                        ));
                    }
                }
                TaskKind::NonControl => {
                    if t.axis.is_some() || t.period_bounds.is_some() {
                        return semantic(format!(
                            "non-control task `{}` cannot have an axis or period bounds",
                            t.name
                        ));
                    }
                }
                TaskKind::Scheduler => {
                    return semantic(format!(
                        "task `{}`: the scheduler task is configured in [scheduler]",
                        t.name
                    ));
                }
            }
        }
        if axes.len() != 2 {
            return semantic("exactly one control task per axis (x and y) is required");
        }
        Ok(())
    }

    fn validate_segments(&self) -> Result<(), ScenarioError> {
        const EPS: f64 = 1e-9;
        let segs = &self.segments;
        let Some(first) = segs.first() else {
            return semantic("execution-time schedule is empty");
        };
        if first.start > EPS {
            return semantic(format!("execution-time schedule gap: [0, {}]", first.start));
        }
        for s in segs {
            if !(s.end > s.start) {
                return semantic(format!("segment [{}, {}] is empty", s.start, s.end));
            }
            for t in &self.tasks {
                match s.means.get(&t.name) {
                    Some(m) if *m > 0.0 && m.is_finite() => {}
                    Some(m) => {
                        return semantic(format!(
                            "segment [{}, {}]: mean execution time {m} of `{}` must be positive",
                            s.start, s.end, t.name
                        ))
                    }
                    None => {
                        return semantic(format!(
                            "segment [{}, {}] has no execution time for `{}`",
                            s.start, s.end, t.name
                        ))
                    }
                }
            }
            if let Some(extra) = s
                .means
                .keys()
                .find(|k| !self.tasks.iter().any(|t| &t.name == *k))
            {
                return semantic(format!(
                    "segment [{}, {}] names unknown task `{extra}`",
                    s.start, s.end
                ));
            }
        }
        for w in segs.windows(2) {
            if w[1].start > w[0].end + EPS {
                return semantic(format!(
                    "execution-time schedule gap: [{}, {}]",
                    w[0].end, w[1].start
                ));
            }
            if w[1].start < w[0].end - EPS {
                return semantic(format!(
                    "execution-time schedule overlap: [{}, {}]",
                    w[1].start, w[0].end
                ));
            }
        }
        let last = segs.last().expect("non-empty");
        if last.end < self.horizon - EPS {
            return semantic(format!(
                "execution-time schedule gap: [{}, {}]",
                last.end, self.horizon
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: Option<u64>,
    horizon: Option<f64>,
    scheduler: Option<RawScheduler>,
    noise: Option<RawNoise>,
    plant: Option<RawPlant>,
    pid: Option<RawPid>,
    reference: Option<RawReference>,
    task: Option<Vec<RawTask>>,
    segment: Option<Vec<RawSegment>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheduler {
    mode: Option<SchedulerMode>,
    desired_utilization: Option<f64>,
    period: Option<f64>,
    exec_time: Option<f64>,
    priority: Option<u32>,
    ge: Option<f64>,
    gec: Option<f64>,
    grf: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    exec_variance: Option<f64>,
    r: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlant {
    gain: Option<f64>,
    inertia: Option<f64>,
    damping: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPid {
    kp: Option<f64>,
    ki: Option<f64>,
    kd: Option<f64>,
    n: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    duration: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: String,
    kind: TaskKind,
    axis: Option<Axis>,
    period: f64,
    priority: u32,
    h_min: Option<f64>,
    h_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawSegment {
    start: f64,
    end: f64,
    #[serde(flatten)]
    means: BTreeMap<String, f64>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before
        .iter()
        .rposition(|&b| b == b'\n')
        .map_or(0, |p| p + 1);
    let column = String::from_utf8_lossy(&before[line_start..])
        .chars()
        .count()
        + 1;
    (line, column)
}

/// Parses and validates a scenario document, filling every omitted key with
/// its default.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ScenarioError::Syntax {
            line,
            column,
            msg: e.message().to_string(),
        }
    })?;

    let mut cfg = ScenarioConfig::default();
    if let Some(seed) = raw.seed {
        cfg.seed = seed;
    }
    if let Some(h) = raw.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = raw.scheduler {
        let d = &mut cfg.scheduler;
        d.mode = s.mode.unwrap_or(d.mode);
        d.desired_utilization = s.desired_utilization.unwrap_or(d.desired_utilization);
        d.period = s.period.unwrap_or(d.period);
        d.exec_time = s.exec_time.unwrap_or(d.exec_time);
        d.priority = s.priority.unwrap_or(d.priority);
        d.ge = s.ge.unwrap_or(d.ge);
        d.gec = s.gec.unwrap_or(d.gec);
        d.grf = s.grf.unwrap_or(d.grf);
    }
    if let Some(n) = raw.noise {
        cfg.noise.exec_variance = n.exec_variance.unwrap_or(cfg.noise.exec_variance);
        cfg.noise.measurement_std = n.r.unwrap_or(cfg.noise.measurement_std);
    }
    if let Some(p) = raw.plant {
        cfg.plant.gain = p.gain.unwrap_or(cfg.plant.gain);
        cfg.plant.inertia = p.inertia.unwrap_or(cfg.plant.inertia);
        cfg.plant.damping = p.damping.unwrap_or(cfg.plant.damping);
    }
    if let Some(p) = raw.pid {
        cfg.pid.kp = p.kp.unwrap_or(cfg.pid.kp);
        cfg.pid.ki = p.ki.unwrap_or(cfg.pid.ki);
        cfg.pid.kd = p.kd.unwrap_or(cfg.pid.kd);
        cfg.pid.n = p.n.unwrap_or(cfg.pid.n);
    }
    if let Some(r) = raw.reference {
        cfg.reference.duration = r.duration.unwrap_or(cfg.reference.duration);
    }
    if let Some(tasks) = raw.task {
        cfg.tasks = tasks
            .into_iter()
            .map(|t| {
                let bounds = match (t.kind, t.h_min, t.h_max) {
                    (TaskKind::Control, lo, hi) => {
                        Some((lo.unwrap_or(DEFAULT_H_MIN), hi.unwrap_or(DEFAULT_H_MAX)))
                    }
                    (_, None, None) => None,
                    (_, lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(0.0))),
                };
                TaskConfig {
                    name: t.name,
                    kind: t.kind,
                    axis: t.axis,
                    period: t.period,
                    priority: t.priority,
                    period_bounds: bounds,
                }
            })
            .collect();
    }
    if let Some(segs) = raw.segment {
        let mut segments: Vec<ExecSegment> = segs
            .into_iter()
            .map(|s| ExecSegment {
                start: s.start,
                end: s.end,
                means: s.means,
            })
            .collect();
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        cfg.segments = segments;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let cfg = parse_scenario("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        // Field-by-field against the documented defaults.
        assert_eq!(cfg.horizon, 4.0);
        assert_eq!(cfg.scheduler.desired_utilization, 0.85);
        assert_eq!(cfg.scheduler.period, 0.020);
        assert_eq!(cfg.scheduler.exec_time, 0.0001);
        assert_eq!(cfg.scheduler.mode, SchedulerMode::Fuzzy);
        assert_eq!((cfg.scheduler.ge, cfg.scheduler.gec), (20.0, 20.0));
        assert_eq!(cfg.scheduler.grf, 1.0 / 14.0);
        assert_eq!(cfg.noise.exec_variance, 0.01);
        assert_eq!(cfg.noise.measurement_std, 0.0);
        let periods: Vec<f64> = cfg.tasks.iter().map(|t| t.period).collect();
        assert_eq!(periods, vec![0.003, 0.004, 0.005]);
        let prio: Vec<u32> = cfg.tasks.iter().map(|t| t.priority).collect();
        assert_eq!(prio, vec![2, 3, 1]);
        assert!(cfg.scheduler.priority < 1);
        assert_eq!(cfg.tasks[0].period_bounds, Some((0.001, 0.007)));
        assert_eq!(cfg.mean_exec_at("tau1", 0.5), Some(0.6e-3));
        assert_eq!(cfg.mean_exec_at("tau2", 2.5), Some(1.2e-3));
        assert_eq!(cfg.mean_exec_at("tau3", 3.5), Some(1.5e-3));
        assert_eq!(cfg.mean_exec_at("tau3", 4.0), Some(1.5e-3));
        assert_eq!(
            cfg.plant,
            PlantParams {
                gain: 1000.0,
                inertia: 0.5,
                damping: 1.0
            }
        );
    }

    #[test]
    fn single_override() {
        let cfg = parse_scenario("[noise]\nr = 0.1\n").unwrap();
        let mut expected = ScenarioConfig::default();
        assert_ne!(cfg, expected);
        expected.noise.measurement_std = 0.1;
        assert_eq!(cfg, expected);
    }

    #[test]
    fn schedule_gap_is_rejected() {
        let doc = r#"
[[segment]]
start = 0.0
end = 3.0
tau1 = 0.0006
tau2 = 0.0004
tau3 = 0.001
"#;
        match parse_scenario(doc) {
            Err(ScenarioError::Semantic(msg)) => {
                assert!(msg.contains("execution-time schedule gap"), "{msg}")
            }
            other => panic!("expected gap error, got {other:?}"),
        }
    }

    #[test]
    fn schedule_overlap_is_rejected() {
        let doc = r#"
[[segment]]
start = 0.0
end = 2.5
tau1 = 0.0006
tau2 = 0.0004
tau3 = 0.001

[[segment]]
start = 2.0
end = 4.0
tau1 = 0.0006
tau2 = 0.0004
tau3 = 0.001
"#;
        let err = parse_scenario(doc).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scenario("horizon = 4.0\n[noise\n").unwrap_err();
        match err {
            ScenarioError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let err = parse_scenario("horizon = \"long\"\n").unwrap_err();
        assert!(
            matches!(err, ScenarioError::Syntax { line: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_scenario("[noise]\nsigma = 0.1\n").is_err());
        assert!(parse_scenario("colour = 3\n").is_err());
    }

    #[test]
    fn mode_is_parsed() {
        let cfg = parse_scenario("[scheduler]\nmode = \"open-loop\"\n").unwrap();
        assert_eq!(cfg.scheduler.mode, SchedulerMode::OpenLoop);
        assert!(parse_scenario("[scheduler]\nmode = \"edf\"\n").is_err());
    }

    #[test]
    fn semantic_checks() {
        for doc in [
            "horizon = -1.0",
            "[scheduler]\ndesired_utilization = 1.2",
            "[scheduler]\ngrf = 0.2",
            "[noise]\nr = -0.1",
            "[scheduler]\npriority = 1",
        ] {
            assert!(
                matches!(parse_scenario(doc), Err(ScenarioError::Semantic(_))),
                "{doc}"
            );
        }
    }

    #[test]
    fn custom_task_set() {
        let doc = r#"
horizon = 1.0

[[task]]
name = "ctl_x"
kind = "control"
axis = "x"
period = 0.005
priority = 1
h_max = 0.01

[[task]]
name = "ctl_y"
kind = "control"
axis = "y"
period = 0.005
priority = 2

[[segment]]
start = 0.0
end = 1.0
ctl_x = 0.001
ctl_y = 0.001
"#;
        let cfg = parse_scenario(doc).unwrap();
        assert_eq!(cfg.tasks.len(), 2);
        assert_eq!(cfg.tasks[0].period_bounds, Some((DEFAULT_H_MIN, 0.01)));
        assert_eq!(cfg.control_task(Axis::Y), Some(1));
    }

    #[test]
    fn missing_axis_is_rejected() {
        let doc = r#"
[[task]]
name = "a"
kind = "control"
axis = "x"
period = 0.003
priority = 2

[[task]]
name = "b"
kind = "non-control"
period = 0.004
priority = 3

[[segment]]
start = 0.0
end = 4.0
a = 0.001
b = 0.001
"#;
        assert!(parse_scenario(doc)
            .unwrap_err()
            .to_string()
            .contains("axis"));
    }
}
