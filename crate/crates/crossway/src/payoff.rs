//! Maps kinematic predictions to subjective payoffs: an objective safety
//! advantage and speed advantage, a gain/loss value for safety, a saturating
//! value for speed, and an acceleration-tendency discount.

use serde::{Deserialize, Serialize};

/// Per-driver weighting and payoff-model constants.
///
/// `sigma` and `delta` trade safety against speed and must sum to one.
/// `dt_sat` bounds how much predicted clearance still counts as a subjective
/// gain; margins beyond it add no value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverProfile {
    pub sigma: f64,
    pub delta: f64,
    /// Gain-branch exponent of the safety value function.
    pub alpha: f64,
    /// Loss-branch exponent of the safety value function.
    pub beta: f64,
    /// Loss-aversion multiplier.
    pub lambda: f64,
    /// Reference point of the safety value function, in seconds of clearance.
    pub t_safe: f64,
    /// Upper bound of the speed payoff.
    pub k_gain: f64,
    /// Curvature of the speed payoff.
    pub theta: f64,
    /// Scale applied to the speed-advantage exponent (the advantage is
    /// already normalized by `v_exp`).
    pub v_ref: f64,
    /// Recommended crossing speed, m/s.
    pub v_exp: f64,
    /// Minimum acceleration probability.
    pub epsilon: f64,
    /// Weight of the clearance increment in the safety advantage.
    pub w_t: f64,
    /// Weight of the normalized future speed; defaults to `1 / v_exp`.
    pub w_vref: f64,
    /// Weight of the speed increment.
    pub w_v: f64,
    /// Arrival-gap band (s) in which a trailing driver has no acceleration
    /// tendency; beyond it the tendency recovers.
    pub tendency_gap: f64,
    /// Saturation bound (s) applied to residual intervals before they enter
    /// the safety advantage.
    pub dt_sat: f64,
}

impl DriverProfile {
    pub fn with_sigma(sigma: f64) -> Self {
        Self { sigma, delta: 1.0 - sigma, ..Self::default() }
    }

    /// Copy with the safety weighting replaced (and `delta` kept consistent).
    pub fn reweighted(&self, sigma: f64) -> Self {
        let s = sigma.clamp(0.05, 0.95);
        Self { sigma: s, delta: 1.0 - s, ..*self }
    }
}

impl Default for DriverProfile {
    fn default() -> Self {
        let v_exp = 11.11;
        Self {
            sigma: 0.5,
            delta: 0.5,
            alpha: 0.88,
            beta: 0.88,
            lambda: 2.25,
            t_safe: 0.0,
            k_gain: 1.142,
            theta: 0.26,
            v_ref: 1.0,
            v_exp,
            epsilon: 0.05,
            w_t: 0.5,
            w_vref: 1.0 / v_exp,
            w_v: 0.5,
            tendency_gap: 1.5,
            dt_sat: 1.5,
        }
    }
}

/// All payoff stages for one strategy of one vehicle in one subgame cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyPayoff {
    pub safety_adv: f64,
    pub speed_adv: f64,
    pub subjective_total: f64,
    pub tendency: f64,
    pub discounted: f64,
}

/// Objective safety advantage: the expected residual interval plus a weighted
/// improvement over the current one.
pub fn safety_advantage(dt_exp: f64, dt_now: f64, profile: &DriverProfile) -> f64 {
    dt_exp + profile.w_t * (dt_exp - dt_now)
}

/// Objective speed advantage after holding `a_exp` for the subgame duration.
pub fn speed_advantage(v_now: f64, a_exp: f64, horizon: f64, profile: &DriverProfile) -> f64 {
    let v_next = v_now + horizon * a_exp;
    profile.w_vref * v_next + profile.w_v * (v_next - v_now)
}

/// Gain/loss value of a safety advantage around the `t_safe` reference.
pub fn prospect_value(safety_adv: f64, profile: &DriverProfile) -> f64 {
    let x = safety_adv - profile.t_safe;
    if x >= 0.0 {
        x.powf(profile.alpha)
    } else {
        -profile.lambda * (-x).powf(profile.beta)
    }
}

/// Saturating subjective value of a speed advantage, bounded by `k_gain`.
pub fn speed_payoff(speed_adv: f64, profile: &DriverProfile) -> f64 {
    profile.k_gain * (1.0 - profile.theta.powf(speed_adv / profile.v_ref))
}

/// Probability-like inclination to accelerate, from the arrival-time
/// ordering. Early vehicles gain tendency with their lead; trailing vehicles
/// sit at the floor until the gap exceeds `tendency_gap`, then recover.
pub fn acceleration_tendency(t_self: f64, t_other: f64, profile: &DriverProfile) -> f64 {
    let eps = profile.epsilon;
    let p = if t_self <= t_other {
        if t_other <= f64::EPSILON {
            eps
        } else {
            (t_other - t_self) / t_other
        }
    } else if t_self - t_other >= profile.tendency_gap {
        if t_other <= f64::EPSILON {
            1.0
        } else {
            1.0 - (0.5 - 0.5 * t_self / t_other).exp()
        }
    } else {
        eps
    };
    p.clamp(eps, 1.0)
}

/// Combine the subjective values and discount by the acceleration tendency.
pub fn strategy_payoff(
    safety_adv: f64,
    speed_adv: f64,
    tendency: f64,
    profile: &DriverProfile,
) -> StrategyPayoff {
    let total =
        profile.sigma * prospect_value(safety_adv, profile) + profile.delta * speed_payoff(speed_adv, profile);
    StrategyPayoff {
        safety_adv,
        speed_adv,
        subjective_total: total,
        tendency,
        discounted: tendency * total,
    }
}
