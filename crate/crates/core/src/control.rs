//! Plant models, discrete PID control and the target trajectory.
//!
//! Each robot axis is the double-integrator-with-friction plant
//! `G(s) = K / (m s^2 + d s)`, i.e. `x1' = x2`, `x2' = -(d/m) x2 + (K/m) u`
//! with output `y = x1`. The default plant is `K = 1000, m = 0.5, d = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    pub gain: f64,
    pub inertia: f64,
    pub damping: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            gain: 1000.0,
            inertia: 0.5,
            damping: 1.0,
        }
    }
}

impl PlantParams {
    fn pole(&self) -> f64 {
        self.damping / self.inertia
    }

    fn input_gain(&self) -> f64 {
        self.gain / self.inertia
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Position, metres.
    pub x1: f64,
    /// Velocity, metres per second.
    pub x2: f64,
    /// Last applied actuator command.
    pub u: f64,
}

impl PlantState {
    pub fn at(position: f64) -> Self {
        Self {
            x1: position,
            ..Self::default()
        }
    }

    pub fn output(&self) -> f64 {
        self.x1
    }
}

/// Exact zero-order-hold response over `dt` seconds with `u` held constant.
///
/// # Panics
///
/// If `dt` is negative or not finite.
pub fn plant_step(params: &PlantParams, state: PlantState, u: f64, dt: f64) -> PlantState {
    assert!(dt >= 0.0 && dt.is_finite(), "plant_step: invalid dt {dt}");
    if dt == 0.0 {
        return PlantState { u, ..state };
    }
    let a = params.pole();
    let b = params.input_gain();
    if a == 0.0 {
        let x2 = state.x2 + b * u * dt;
        let x1 = state.x1 + state.x2 * dt + 0.5 * b * u * dt * dt;
        return PlantState { x1, x2, u };
    }
    let v_ss = b * u / a;
    let dv = state.x2 - v_ss;
    // 1 - exp(-a dt), computed without cancellation.
    let decay = -(-a * dt).exp_m1();
    PlantState {
        x1: state.x1 + v_ss * dt + dv * decay / a,
        x2: v_ss + dv * (1.0 - decay),
        u,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter: the filter time constant is `kd / (kp * n)`.
    pub n: f64,
}

impl Default for PidGains {
    /// Tuned on the default plant at h = 4 ms: a unit step settles to 2% in
    /// about 0.05 s with under 1% overshoot.
    fn default() -> Self {
        Self {
            kp: 2.0,
            ki: 0.05,
            kd: 0.045,
            n: 20.0,
        }
    }
}

/// Positional PID with a backward-difference integrator and a first-order
/// filtered derivative acting on the measurement. All discrete coefficients
/// are recomputed from the current period on every call.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    gains: PidGains,
    integrator: f64,
    derivative: f64,
    prev_y: Option<f64>,
    prev_error: f64,
    h: f64,
}

impl PidState {
    pub fn new(gains: PidGains, h: f64) -> Self {
        assert!(h > 0.0, "sampling period must be positive");
        Self {
            gains,
            integrator: 0.0,
            derivative: 0.0,
            prev_y: None,
            prev_error: 0.0,
            h,
        }
    }

    pub fn set_period(&mut self, h: f64) {
        assert!(h > 0.0, "sampling period must be positive");
        self.h = h;
    }

    pub fn period(&self) -> f64 {
        self.h
    }

    pub fn gains(&self) -> &PidGains {
        &self.gains
    }

    pub fn integrator(&self) -> f64 {
        self.integrator
    }

    pub fn previous_error(&self) -> f64 {
        self.prev_error
    }

    pub fn compute(&mut self, reference: f64, y: f64) -> f64 {
        let PidGains { kp, ki, kd, n } = self.gains;
        let h = self.h;
        let error = reference - y;

        self.integrator += ki * h * error;

        if let Some(prev_y) = self.prev_y {
            if kd > 0.0 {
                let tf = if kp > 0.0 && n > 0.0 {
                    kd / (kp * n)
                } else {
                    0.0
                };
                self.derivative = (tf * self.derivative - kd * (y - prev_y)) / (tf + h);
            }
        }
        self.prev_y = Some(y);
        self.prev_error = error;

        kp * error + self.integrator + self.derivative
    }
}

/// Upper half circle from (0, 0) to (2, 0) around (1, 0) at constant angular
/// speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePath {
    pub duration: f64,
}

impl Default for ReferencePath {
    fn default() -> Self {
        Self { duration: 4.0 }
    }
}

impl ReferencePath {
    pub const CENTRE: (f64, f64) = (1.0, 0.0);
    pub const RADIUS: f64 = 1.0;

    /// Target position at `t`; times outside `[0, duration]` are clamped.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, self.duration);
        if t == 0.0 {
            return (0.0, 0.0);
        }
        if t == self.duration {
            return (2.0, 0.0);
        }
        let angle = PI * (1.0 - t / self.duration);
        let (s, c) = angle.sin_cos();
        (
            Self::CENTRE.0 + Self::RADIUS * c,
            Self::CENTRE.1 + Self::RADIUS * s,
        )
    }
}

pub fn tracking_error(actual: (f64, f64), reference: (f64, f64)) -> f64 {
    (actual.0 - reference.0).hypot(actual.1 - reference.1)
}
