//! Constant-acceleration predictions of conflict-area arrival and passing
//! times, and the residual safety interval between two crossing vehicles.

use serde::{Deserialize, Serialize};

/// Saturation ceilings for predicted times and residual intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Arrival/passing times saturate here when a vehicle never covers the
    /// distance (it stops first, or is already stopped).
    pub t_max: f64,
    /// Residual intervals are clamped to `[-dt_max, dt_max]`.
    pub dt_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { t_max: 100.0, dt_max: 100.0 }
    }
}

/// Longitudinal state of one vehicle along its own path. `pos` is the signed
/// arc distance of the vehicle head past the stopline (negative while
/// approaching).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
}

/// Distances from one vehicle to a conflict rectangle: `near` is head to near
/// edge, `far` is tail to far edge, with `far = near + own_length +
/// other_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictDistances {
    pub near: f64,
    pub far: f64,
    pub own_length: f64,
    pub other_width: f64,
}

impl ConflictDistances {
    pub fn new(near: f64, own_length: f64, other_width: f64) -> Self {
        Self { near, far: near + own_length + other_width, own_length, other_width }
    }
}

/// Predicted arrival and passing times for one vehicle and one conflict area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePair {
    pub arrival: f64,
    pub passing: f64,
}

/// Which of the two vehicles in a subgame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Participant {
    A,
    B,
}

/// Outcome of chasing a distance under constant acceleration: either the
/// distance is covered at time `t`, or the vehicle comes to rest short of it
/// at time `t` and never covers it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reach {
    At(f64),
    StoppedShort(f64),
}

impl Reach {
    /// The time of the event (crossing or standstill), capped at `t_max`.
    pub fn time(self, lim: &Limits) -> f64 {
        match self {
            Reach::At(t) | Reach::StoppedShort(t) => t.min(lim.t_max),
        }
    }

    pub fn stopped_short(self) -> bool {
        matches!(self, Reach::StoppedShort(_))
    }
}

const ACCEL_EPS: f64 = 1e-9;

/// First time a vehicle at `speed` with constant `accel` covers `dist`
/// meters, or the standstill time if it stops short.
///
/// The crossing root of `a/2 t^2 + V t = d` is computed as
/// `2d / (V + sqrt(V^2 + 2ad))`, which is exact for both signs of `a` and
/// avoids cancellation for small `a`.
pub fn reach(speed: f64, accel: f64, dist: f64, lim: &Limits) -> Reach {
    debug_assert!(speed >= 0.0, "negative speed reached kinematics");
    if dist <= 0.0 {
        return Reach::At(0.0);
    }
    if accel.abs() < ACCEL_EPS {
        if speed <= 0.0 {
            // Already stopped with no drive: standstill "now".
            return Reach::StoppedShort(0.0);
        }
        return Reach::At(dist / speed);
    }
    let disc = speed * speed + 2.0 * accel * dist;
    if accel < 0.0 && disc < 0.0 {
        // Decelerates to rest after V/|a| seconds, short of the distance.
        return Reach::StoppedShort(speed / -accel);
    }
    if speed <= 0.0 && accel < 0.0 {
        return Reach::StoppedShort(0.0);
    }
    let t = 2.0 * dist / (speed + disc.max(0.0).sqrt());
    Reach::At(t.min(lim.t_max))
}

/// Time to arrive at the near edge of a conflict area; `t_max` when the
/// vehicle stops before covering the distance.
pub fn arrival_time(state: &MotionState, dist: f64, lim: &Limits) -> f64 {
    match reach(state.speed, state.accel, dist, lim) {
        Reach::At(t) => t.min(lim.t_max),
        Reach::StoppedShort(_) => lim.t_max,
    }
}

/// Time for the tail to clear the far edge of a conflict area; same
/// saturation as [`arrival_time`].
pub fn passing_time(state: &MotionState, dist: &ConflictDistances, lim: &Limits) -> f64 {
    arrival_time(state, dist.far, lim)
}

/// Both predicted times for one vehicle and one conflict area.
pub fn time_pair(state: &MotionState, dist: &ConflictDistances, lim: &Limits) -> TimePair {
    TimePair {
        arrival: arrival_time(state, dist.near, lim),
        passing: passing_time(state, dist, lim),
    }
}

/// The vehicle that crosses first: earlier arrival wins, exact ties go to the
/// right-side vehicle.
pub fn priority_order(t_a: f64, t_b: f64, right_side: Participant) -> Participant {
    if t_a < t_b {
        Participant::A
    } else if t_b < t_a {
        Participant::B
    } else {
        right_side
    }
}

/// Residual interval: the late vehicle's arrival minus the early vehicle's
/// passing. Negative means a predicted collision. Saturates at `+dt_max`
/// when the late vehicle never arrives, and at `-dt_max` when the early
/// vehicle stalls without clearing while the late one still approaches.
pub fn residual_interval(host: &TimePair, other: &TimePair, host_is_late: bool, lim: &Limits) -> f64 {
    let (late, early) = if host_is_late { (host, other) } else { (other, host) };
    if late.arrival >= lim.t_max {
        return lim.dt_max;
    }
    if early.passing >= lim.t_max {
        return -lim.dt_max;
    }
    (late.arrival - early.passing).clamp(-lim.dt_max, lim.dt_max)
}
