//! Period managers: open-loop, ideal (omniscient) and fuzzy.
//!
//! Every manager produces one global rescaling factor `eta` per invocation;
//! [`apply_periods`] then sets `h_i <- clamp(eta * h_i, h_min, h_max)` for
//! each control loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::LookupTable;

#[derive(Debug, Error, PartialEq)]
pub enum FeedbackError {
    #[error(
        "infeasible load: non-control utilization {others:.4} leaves no room under target {target:.4}"
    )]
    InfeasibleLoad { others: f64, target: f64 },
    #[error("invalid scheduler parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerMode {
    OpenLoop,
    Ideal,
    Fuzzy,
}

impl SchedulerMode {
    pub const ALL: [SchedulerMode; 3] = [
        SchedulerMode::OpenLoop,
        SchedulerMode::Ideal,
        SchedulerMode::Fuzzy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerMode::OpenLoop => "open-loop",
            SchedulerMode::Ideal => "ideal",
            SchedulerMode::Fuzzy => "fuzzy",
        }
    }
}

impl std::str::FromStr for SchedulerMode {
    type Err = FeedbackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open-loop" => Ok(SchedulerMode::OpenLoop),
            "ideal" => Ok(SchedulerMode::Ideal),
            "fuzzy" => Ok(SchedulerMode::Fuzzy),
            other => Err(FeedbackError::InvalidParameter(format!(
                "unknown scheduler mode `{other}` (expected open-loop, ideal or fuzzy)"
            ))),
        }
    }
}

impl std::fmt::Display for SchedulerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `round(value * gain)` half away from zero, clamped to `[-q_max, q_max]`.
pub fn quantize(value: f64, gain: f64, q_max: i32) -> i32 {
    let q = (value * gain).round();
    q.clamp(f64::from(-q_max), f64::from(q_max)) as i32
}

/// Fuzzy scheduler parameters and the one piece of memory it keeps, the
/// previous utilization error.
#[derive(Debug, Clone, PartialEq)]
pub struct FfsState {
    target: f64,
    ge: f64,
    gec: f64,
    grf: f64,
    prev_error: f64,
    table: LookupTable,
}

/// Largest quantized input level.
const INPUT_LEVELS: i32 = 6;

impl FfsState {
    pub fn new(
        target: f64,
        ge: f64,
        gec: f64,
        grf: f64,
        table: LookupTable,
    ) -> Result<Self, FeedbackError> {
        if !(target > 0.0 && target < 1.0) {
            return Err(FeedbackError::InvalidParameter(format!(
                "desired utilization {target} must lie in (0, 1)"
            )));
        }
        if !(ge > 0.0 && gec > 0.0 && grf > 0.0) {
            return Err(FeedbackError::InvalidParameter(
                "scaling gains must be positive".into(),
            ));
        }
        if grf * 7.0 > 0.5 + 1e-12 {
            return Err(FeedbackError::InvalidParameter(format!(
                "output gain {grf} lets eta leave [0.5, 1.5]"
            )));
        }
        Ok(Self {
            target,
            ge,
            gec,
            grf,
            prev_error: 0.0,
            table,
        })
    }

    /// U_R = 0.85, GE = GEC = 20, GRF = 1/14 and the shipped table.
    pub fn with_defaults() -> Self {
        Self::new(0.85, 20.0, 20.0, 1.0 / 14.0, LookupTable::golden()).expect("valid defaults")
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn previous_error(&self) -> f64 {
        self.prev_error
    }

    pub fn set_previous_error(&mut self, e: f64) {
        self.prev_error = e;
    }

    /// One invocation: error and change of error are quantized, looked up,
    /// and the output level is mapped to `eta = 1 + GRF * level`.
    pub fn step(&mut self, u_hat: f64) -> FfsOutput {
        let error = self.target - u_hat;
        let change = error - self.prev_error;
        let e_q = quantize(error, self.ge, INPUT_LEVELS);
        let ec_q = quantize(change, self.gec, INPUT_LEVELS);
        let level = self
            .table
            .lookup(e_q, ec_q)
            .expect("quantized inputs are within the table");
        self.prev_error = error;
        FfsOutput {
            error,
            change,
            e_q,
            ec_q,
            level,
            eta: 1.0 + self.grf * f64::from(level),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FfsOutput {
    pub error: f64,
    pub change: f64,
    pub e_q: i32,
    pub ec_q: i32,
    pub level: i32,
    pub eta: f64,
}

/// Rescaling factor that puts the next interval exactly on `target`, given
/// exact execution times `c` and current periods `h` of the control loops.
pub fn ideal_eta(c: &[f64], h: &[f64], others: f64, target: f64) -> Result<f64, FeedbackError> {
    if c.len() != h.len() || c.iter().chain(h).any(|v| !(*v > 0.0)) {
        return Err(FeedbackError::InvalidParameter(
            "execution times and periods must be positive and paired".into(),
        ));
    }
    let budget = target - others;
    if !(budget > 0.0) {
        return Err(FeedbackError::InfeasibleLoad { others, target });
    }
    Ok(control_demand(c, h) / budget)
}

pub fn control_demand(c: &[f64], h: &[f64]) -> f64 {
    c.iter().zip(h).map(|(c, h)| c / h).sum()
}

/// Always the identity rescale.
pub fn open_loop_step() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopPeriod {
    pub period: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaleDecision {
    pub eta: f64,
    pub periods: Vec<f64>,
    /// Set where the bound, not `eta * h`, decided the new period.
    pub clamped: Vec<bool>,
}

impl RescaleDecision {
    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }
}

pub fn apply_periods(eta: f64, loops: &[LoopPeriod]) -> RescaleDecision {
    assert!(
        eta > 0.0 && eta.is_finite(),
        "rescaling factor must be positive, got {eta}"
    );
    let (periods, clamped) = loops
        .iter()
        .map(|l| {
            let raw = eta * l.period;
            let h = raw.clamp(l.min, l.max);
            (h, h != raw)
        })
        .unzip();
    RescaleDecision {
        eta,
        periods,
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_cases() {
        assert_eq!(quantize(0.0, 20.0, 6), 0);
        assert_eq!(quantize(0.15, 20.0, 6), 3);
        assert_eq!(quantize(-0.5, 20.0, 6), -6);
        assert_eq!(quantize(0.025, 20.0, 6), 1);
        assert_eq!(quantize(-0.025, 20.0, 6), -1);
    }

    #[test]
    fn ffs_at_setpoint_is_identity() {
        let mut ffs = FfsState::with_defaults();
        let out = ffs.step(0.85);
        assert_eq!((out.e_q, out.ec_q, out.level), (0, 0, 0));
        assert_eq!(out.eta, 1.0);
    }

    #[test]
    fn ffs_overload_enlarges_periods() {
        let mut ffs = FfsState::with_defaults();
        ffs.set_previous_error(-0.15);
        let out = ffs.step(1.0);
        assert_eq!((out.e_q, out.ec_q, out.level), (-3, 0, 5));
        assert!((out.eta - (1.0 + 5.0 / 14.0)).abs() < 1e-15);
        assert!((out.eta - 1.3571).abs() < 1e-4);
    }

    #[test]
    fn ffs_underload_shrinks_periods() {
        let mut ffs = FfsState::with_defaults();
        ffs.set_previous_error(0.30);
        let out = ffs.step(0.55);
        assert_eq!((out.e_q, out.ec_q, out.level), (6, 0, -5));
        assert!((out.eta - 0.6429).abs() < 1e-4);
        assert_eq!(ffs.previous_error(), out.error);
    }

    #[test]
    fn ffs_rejects_bad_parameters() {
        let t = LookupTable::golden();
        assert!(FfsState::new(1.0, 20.0, 20.0, 1.0 / 14.0, t.clone()).is_err());
        assert!(FfsState::new(0.85, 0.0, 20.0, 1.0 / 14.0, t.clone()).is_err());
        assert!(FfsState::new(0.85, 20.0, 20.0, 0.1, t).is_err());
    }

    #[test]
    fn ideal_eta_overload_example() {
        let eta = ideal_eta(&[1.2e-3, 1.2e-3], &[3e-3, 4e-3], 0.50, 0.85).unwrap();
        assert!((eta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_eta_fixed_point() {
        let c = [0.6e-3, 0.4e-3];
        let h = [3e-3, 4e-3];
        let others = 0.85 - control_demand(&c, &h);
        assert!((ideal_eta(&c, &h, others, 0.85).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_eta_reaches_target() {
        let c = [1.2e-3, 0.4e-3];
        let h = [3.3e-3, 4.1e-3];
        let eta = ideal_eta(&c, &h, 0.4, 0.85).unwrap();
        let scaled: Vec<f64> = h.iter().map(|h| eta * h).collect();
        assert!((control_demand(&c, &scaled) + 0.4 - 0.85).abs() < 1e-12);
    }

    #[test]
    fn ideal_eta_infeasible() {
        assert!(matches!(
            ideal_eta(&[1e-3], &[3e-3], 0.9, 0.85),
            Err(FeedbackError::InfeasibleLoad { .. })
        ));
    }

    fn loops(h: [f64; 2]) -> Vec<LoopPeriod> {
        h.iter()
            .map(|&p| LoopPeriod {
                period: p,
                min: 1e-3,
                max: 7e-3,
            })
            .collect()
    }

    #[test]
    fn apply_periods_clamps_at_h_max() {
        let d = apply_periods(2.0, &loops([3e-3, 4e-3]));
        assert_eq!(d.periods, vec![6e-3, 7e-3]);
        assert_eq!(d.clamped, vec![false, true]);
    }

    #[test]
    fn apply_periods_identity() {
        let d = apply_periods(open_loop_step(), &loops([3e-3, 4e-3]));
        assert_eq!(d.periods, vec![3e-3, 4e-3]);
        assert!(!d.any_clamped());
    }

    #[test]
    fn apply_periods_shrink() {
        let d = apply_periods(0.5, &loops([6e-3, 7e-3]));
        assert_eq!(d.periods, vec![3e-3, 3.5e-3]);
        assert!(!d.any_clamped());
    }

    #[test]
    fn apply_periods_floor() {
        let d = apply_periods(0.5, &loops([1.5e-3, 4e-3]));
        assert_eq!(d.periods, vec![1e-3, 2e-3]);
        assert_eq!(d.clamped, vec![true, false]);
    }

    #[test]
    fn open_loop_keeps_nominal_periods_forever() {
        let mut l = loops([3e-3, 4e-3]);
        for _ in 0..100 {
            let d = apply_periods(open_loop_step(), &l);
            for (lp, h) in l.iter_mut().zip(d.periods) {
                lp.period = h;
            }
        }
        assert_eq!(l[0].period, 3e-3);
        assert_eq!(l[1].period, 4e-3);
    }

    #[test]
    fn table_zero_column_signs_match_direction() {
        let t = LookupTable::golden();
        for e in -6..=6 {
            let v = t.lookup(e, 0).unwrap();
            // e < 0 is overload: periods must grow. Underload shrinks them,
            // but only once the error is large.
            match e {
                e if e < 0 => assert!(v > 0, "e={e}"),
                e if e >= 4 => assert!(v < 0, "e={e}"),
                e => assert_eq!(v, 0, "e={e}"),
            }
        }
    }
}
