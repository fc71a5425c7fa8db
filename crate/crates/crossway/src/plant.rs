//! Longitudinal vehicle substitute: first-order actuator lag on the target
//! acceleration, forward integration with standstill clamping, and the
//! emergency-braking trigger.

use crate::coordinator::PathIntent;
use crate::kinematics::MotionState;
use crate::payoff::DriverProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleDims {
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleDims {
    fn default() -> Self {
        Self { length: 4.5, width: 1.8 }
    }
}

/// Actuation envelope and lag constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Actuation {
    pub a_min: f64,
    pub a_max: f64,
    pub a_aeb: f64,
    pub v_max: f64,
    /// First-order lag time constant of the acceleration actuator.
    pub tau: f64,
}

impl Default for Actuation {
    fn default() -> Self {
        Self { a_min: -4.0, a_max: 2.0, a_aeb: -8.0, v_max: 120.0 / 3.6, tau: 0.5 }
    }
}

impl Actuation {
    /// Candidate target accelerations for an accelerate decision (maintaining
    /// speed counts as accelerating, so 0 is always present).
    pub fn accel_grid(&self) -> Vec<f64> {
        [0.0, 0.5, 1.0, 1.5, 2.0].into_iter().filter(|a| *a <= self.a_max + 1e-9).collect()
    }

    /// Candidate target accelerations for a decelerate decision, mildest
    /// first.
    pub fn decel_grid(&self) -> Vec<f64> {
        [-0.5, -1.0, -2.0, -3.0, -4.0].into_iter().filter(|a| *a >= self.a_min - 1e-9).collect()
    }
}

/// Physical state, route, and driver model of one vehicle.
#[derive(Debug, Clone)]
pub struct VehicleAgent {
    pub id: usize,
    pub intent: PathIntent,
    pub motion: MotionState,
    pub profile: DriverProfile,
    pub dims: VehicleDims,
    pub act: Actuation,
    /// Target acceleration commanded by the decision layer.
    pub a_target: f64,
    /// Emergency braking latch; cleared when the conflict that raised it has
    /// resolved.
    pub aeb_latched: bool,
    /// True if emergency braking ever fired during the run.
    pub aeb_fired: bool,
    pub min_speed_seen: f64,
}

impl VehicleAgent {
    pub fn new(
        id: usize,
        intent: PathIntent,
        motion: MotionState,
        profile: DriverProfile,
        dims: VehicleDims,
        act: Actuation,
    ) -> Self {
        let v0 = motion.speed;
        Self {
            id,
            intent,
            motion,
            profile,
            dims,
            act,
            a_target: motion.accel,
            aeb_latched: false,
            aeb_fired: false,
            min_speed_seen: v0,
        }
    }

    /// Advance one integration step. The lag filter uses its exact
    /// discretization, so the filtered acceleration tracks the continuous
    /// exponential response at every grid point.
    pub fn step(&mut self, dt: f64) {
        let target = if self.aeb_latched { self.act.a_aeb } else { self.a_target };
        let blend = 1.0 - (-dt / self.act.tau).exp();
        self.motion.accel += (target - self.motion.accel) * blend;

        let mut v = self.motion.speed + self.motion.accel * dt;
        if v <= 0.0 {
            v = 0.0;
            if self.motion.accel < 0.0 {
                self.motion.accel = 0.0;
            }
        }
        if v > self.act.v_max {
            v = self.act.v_max;
        }
        self.motion.speed = v;
        self.motion.pos += v * dt;
        self.min_speed_seen = self.min_speed_seen.min(v);
    }
}

/// Inputs to the emergency-braking check for one live conflict.
#[derive(Debug, Clone, Copy)]
pub struct AebView {
    /// Current residual interval of the pair (negative predicts a collision).
    pub dt_now: f64,
    /// True when this vehicle is the late one of the pair.
    pub host_is_late: bool,
    /// Head distance to the near edge of the shared conflict square.
    pub d_near: f64,
    pub speed: f64,
}

/// Emergency braking fires for the late vehicle of a conflicted pair once the
/// predicted overlap exceeds `dt_threshold` and even the reserve braking
/// level can no longer stop `margin` meters short of the square.
pub fn aeb_check(view: &AebView, act: &Actuation, margin: f64, dt_threshold: f64) -> bool {
    if !view.host_is_late || view.dt_now >= -dt_threshold {
        return false;
    }
    let stopping = view.speed * view.speed / (2.0 * act.a_aeb.abs());
    stopping >= view.d_near - margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordinator::{Arm, Maneuver};
    use approx::assert_abs_diff_eq;

    fn agent(speed: f64, accel: f64) -> VehicleAgent {
        VehicleAgent::new(
            0,
            PathIntent { arm: Arm::South, maneuver: Maneuver::Straight },
            MotionState { pos: 0.0, speed, accel },
            DriverProfile::default(),
            VehicleDims::default(),
            Actuation::default(),
        )
    }

    #[test]
    fn filter_matches_continuous_step_response() {
        let mut a = agent(20.0, 0.0);
        a.a_target = 2.0;
        let dt = 1e-3;
        let steps = (a.act.tau / dt).round() as usize;
        for _ in 0..steps {
            a.step(dt);
        }
        let expected = 2.0 * (1.0 - (-1.0f64).exp());
        assert_abs_diff_eq!(a.motion.accel, expected, epsilon = 1e-6);
    }

    #[test]
    fn filter_tracks_exponential_on_whole_grid() {
        let mut a = agent(30.0, 0.0);
        a.a_target = -3.0;
        let dt = 1e-3;
        for k in 1..=2_000 {
            a.step(dt);
            let t = k as f64 * dt;
            let expected = -3.0 * (1.0 - (-t / a.act.tau).exp());
            assert!((a.motion.accel - expected).abs() <= 1e-6, "t={t}");
        }
    }

    #[test]
    fn standstill_clamp() {
        let mut a = agent(0.2, 0.0);
        a.a_target = -4.0;
        for _ in 0..2_000 {
            a.step(1e-3);
        }
        assert_eq!(a.motion.speed, 0.0);
        assert_eq!(a.motion.accel, 0.0);
        let pos = a.motion.pos;
        a.step(1e-3);
        assert_eq!(a.motion.pos, pos);
    }

    #[test]
    fn constant_speed_position_accuracy() {
        let mut a = agent(10.0, 0.0);
        a.a_target = 0.0;
        for _ in 0..1_000 {
            a.step(1e-3);
        }
        assert_abs_diff_eq!(a.motion.pos, 10.0, epsilon = 1e-3);
        assert_abs_diff_eq!(a.motion.speed, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn speed_is_capped() {
        let mut a = agent(33.0, 0.0);
        a.a_target = 2.0;
        for _ in 0..5_000 {
            a.step(1e-3);
        }
        assert!(a.motion.speed <= a.act.v_max + 1e-12);
    }

    #[test]
    fn aeb_trigger_cases() {
        let act = Actuation::default();
        // Safe interval.
        assert!(!aeb_check(
            &AebView { dt_now: 2.0, host_is_late: true, d_near: 8.0, speed: 10.0 },
            &act,
            3.0,
            0.3
        ));
        // Predicted overlap, late, and cannot stop 3 m short: 6.25 m needed
        // vs 5 m available.
        assert!(aeb_check(
            &AebView { dt_now: -0.5, host_is_late: true, d_near: 8.0, speed: 10.0 },
            &act,
            3.0,
            0.3
        ));
        // The early vehicle proceeds.
        assert!(!aeb_check(
            &AebView { dt_now: -0.5, host_is_late: false, d_near: 8.0, speed: 10.0 },
            &act,
            3.0,
            0.3
        ));
        // Transient sub-threshold overlap does not fire.
        assert!(!aeb_check(
            &AebView { dt_now: -0.1, host_is_late: true, d_near: 8.0, speed: 10.0 },
            &act,
            3.0,
            0.3
        ));
    }
}
