//! One two-vehicle subgame: build the 2x2 discounted payoff matrix from the
//! current states, and pick a concrete target acceleration once the top-level
//! strategy is decided.

use crate::coordinator::Command;
use crate::game::{PayoffMatrix, Strategy};
use crate::kinematics::{self, Limits, MotionState, Reach};
use crate::payoff::{self, DriverProfile, StrategyPayoff};
use crate::plant::Actuation;

/// Snapshot of one vehicle as seen by the subgame, relative to one conflict
/// square.
#[derive(Debug, Clone, Copy)]
pub struct AgentSnapshot {
    pub speed: f64,
    pub accel: f64,
    /// Head distance to the square's near edge (negative once inside).
    pub near: f64,
    pub length: f64,
    pub width: f64,
    pub profile: DriverProfile,
}

/// Everything needed to evaluate one subgame between a host and one
/// (possibly virtual) opponent.
#[derive(Debug, Clone, Copy)]
pub struct SubgameContext {
    pub host: AgentSnapshot,
    pub other: AgentSnapshot,
    /// True when the host is the right-side vehicle for arrival ties.
    pub host_tie_priority: bool,
    /// Subgame duration, s.
    pub horizon: f64,
    /// Representative strategy accelerations, positive magnitudes.
    pub nominal_acc: f64,
    pub nominal_dec: f64,
    pub limits: Limits,
}

/// Representative constant acceleration a strategy commits to for the
/// prediction horizon. Accelerating keeps at least the current drive (so a
/// hard-accelerating vehicle is not re-based to the nominal), decelerating
/// brakes at least at the nominal level.
pub fn expected_accel(current: f64, strategy: Strategy, nominal_acc: f64, nominal_dec: f64) -> f64 {
    match strategy {
        Strategy::Accelerate => current.max(nominal_acc),
        Strategy::Decelerate => current.min(-nominal_dec),
    }
}

/// Predicted times for one vehicle in one cell, with stall continuation: a
/// vehicle that would stop short contributes its standstill time instead of
/// an unbounded sentinel, which keeps cell payoffs finite and comparable.
#[derive(Debug, Clone, Copy)]
struct CellTimes {
    arrival: f64,
    passing: f64,
    stalled: bool,
}

fn cell_times(speed: f64, accel: f64, near: f64, far: f64, lim: &Limits) -> CellTimes {
    let near_reach = kinematics::reach(speed, accel, near, lim);
    let far_reach = kinematics::reach(speed, accel, far, lim);
    CellTimes {
        arrival: near_reach.time(lim),
        passing: far_reach.time(lim),
        stalled: near_reach.stopped_short(),
    }
}

/// Residual interval between two cell predictions, saturated at `dt_sat`
/// (subjective clearance beyond that bound adds no value).
fn cell_residual(host: &CellTimes, other: &CellTimes, host_tie_priority: bool, dt_sat: f64) -> f64 {
    let host_early =
        host.arrival < other.arrival || (host.arrival == other.arrival && host_tie_priority);
    let raw = if host_early {
        other.arrival - host.passing
    } else {
        host.arrival - other.passing
    };
    raw.clamp(-dt_sat, dt_sat)
}

/// Full evaluation of one subgame cell for both vehicles.
#[derive(Debug, Clone, Copy)]
pub struct CellEval {
    pub host: StrategyPayoff,
    pub other: StrategyPayoff,
}

/// Matrix plus per-cell detail for the decision log.
#[derive(Debug, Clone)]
pub struct SubgameEval {
    pub matrix: PayoffMatrix,
    pub cells: [[CellEval; 2]; 2],
    pub dt_now: f64,
}

/// Residual interval of the pair under the current (filtered) accelerations.
pub fn current_residual(ctx: &SubgameContext) -> f64 {
    let h = &ctx.host;
    let o = &ctx.other;
    let ht = cell_times(h.speed, h.accel, h.near, h.near + h.length + o.width, &ctx.limits);
    let ot = cell_times(o.speed, o.accel, o.near, o.near + o.length + h.width, &ctx.limits);
    let sat = h.profile.dt_sat.max(o.profile.dt_sat);
    cell_residual(&ht, &ot, ctx.host_tie_priority, sat)
}

/// Build the discounted payoff matrix, with both safety weightings raised by
/// `sigma_boost` (used by the no-equilibrium escalation).
pub fn evaluate(ctx: &SubgameContext, sigma_boost: f64) -> SubgameEval {
    let host_profile = boosted(&ctx.host.profile, sigma_boost);
    let other_profile = boosted(&ctx.other.profile, sigma_boost);
    let dt_now = current_residual(ctx);

    let mut cells = [[CellEval {
        host: zero_payoff(),
        other: zero_payoff(),
    }; 2]; 2];
    let mut matrix = PayoffMatrix { cells: [[(0.0, 0.0); 2]; 2] };

    for (hi, host_strategy) in Strategy::ALL.into_iter().enumerate() {
        for (oi, other_strategy) in Strategy::ALL.into_iter().enumerate() {
            let ea_h = expected_accel(ctx.host.accel, host_strategy, ctx.nominal_acc, ctx.nominal_dec);
            let ea_o =
                expected_accel(ctx.other.accel, other_strategy, ctx.nominal_acc, ctx.nominal_dec);
            let ht = cell_times(
                ctx.host.speed,
                ea_h,
                ctx.host.near,
                ctx.host.near + ctx.host.length + ctx.other.width,
                &ctx.limits,
            );
            let ot = cell_times(
                ctx.other.speed,
                ea_o,
                ctx.other.near,
                ctx.other.near + ctx.other.length + ctx.host.width,
                &ctx.limits,
            );

            let host_cell = vehicle_payoff(
                &host_profile,
                ctx.host.speed,
                ea_h,
                &ht,
                &ot,
                dt_now,
                ctx.horizon,
            );
            let other_cell = vehicle_payoff(
                &other_profile,
                ctx.other.speed,
                ea_o,
                &ot,
                &ht,
                dt_now,
                ctx.horizon,
            );
            // The residual interval is a property of the pair; compute it
            // once per cell with the host-side tie rule.
            let dt_exp = cell_residual(&ht, &ot, ctx.host_tie_priority, host_profile.dt_sat);
            let host_pay = finish_payoff(&host_profile, host_cell, dt_exp, dt_now);
            let dt_exp_o = cell_residual(&ht, &ot, ctx.host_tie_priority, other_profile.dt_sat);
            let other_pay = finish_payoff(&other_profile, other_cell, dt_exp_o, dt_now);

            cells[hi][oi] = CellEval { host: host_pay, other: other_pay };
            matrix.cells[hi][oi] = (host_pay.discounted, other_pay.discounted);
        }
    }
    SubgameEval { matrix, cells, dt_now }
}

struct VehicleCell {
    speed_adv: f64,
    tendency: f64,
}

fn vehicle_payoff(
    profile: &DriverProfile,
    speed: f64,
    a_exp: f64,
    own: &CellTimes,
    opp: &CellTimes,
    _dt_now: f64,
    horizon: f64,
) -> VehicleCell {
    let speed_adv = payoff::speed_advantage(speed, a_exp, horizon, profile);
    // A vehicle whose plan ends in a standstill has no inclination to
    // accelerate under it.
    let tendency = if own.stalled {
        profile.epsilon
    } else {
        payoff::acceleration_tendency(own.arrival, opp.arrival, profile)
    };
    VehicleCell { speed_adv, tendency }
}

fn finish_payoff(
    profile: &DriverProfile,
    cell: VehicleCell,
    dt_exp: f64,
    dt_now: f64,
) -> StrategyPayoff {
    let dt_now_sat = dt_now.clamp(-profile.dt_sat, profile.dt_sat);
    let a_s = payoff::safety_advantage(dt_exp, dt_now_sat, profile);
    payoff::strategy_payoff(a_s, cell.speed_adv, cell.tendency, profile)
}

fn boosted(profile: &DriverProfile, sigma_boost: f64) -> DriverProfile {
    if sigma_boost == 0.0 {
        *profile
    } else {
        profile.reweighted(profile.sigma + sigma_boost)
    }
}

fn zero_payoff() -> StrategyPayoff {
    StrategyPayoff { safety_adv: 0.0, speed_adv: 0.0, subjective_total: 0.0, tendency: 0.0, discounted: 0.0 }
}

/// One live opponent as seen from the bottom-level acceleration search.
#[derive(Debug, Clone, Copy)]
pub struct OpponentContext {
    pub speed: f64,
    pub accel: f64,
    pub length: f64,
    pub width: f64,
    /// Opponent head distance to the shared square's near edge.
    pub near: f64,
    /// Host head distance to the same square's near edge.
    pub host_near: f64,
    /// Constant acceleration the opponent is expected to hold (derived from
    /// its aggregated command, so chained conflicts see what the opponent
    /// will actually do rather than a pair-local fiction).
    pub expected_accel: f64,
    pub host_tie_priority: bool,
}

/// Inputs for choosing a target acceleration after the strategies resolved.
#[derive(Debug, Clone)]
pub struct BottomLevel<'a> {
    pub host_speed: f64,
    pub host_accel: f64,
    pub host_length: f64,
    pub host_width: f64,
    pub act: &'a Actuation,
    pub horizon: f64,
    /// Minimum predicted clearance a candidate must keep against every
    /// opponent to count as comfortable.
    pub comfort_gap: f64,
    pub nominal_acc: f64,
    pub nominal_dec: f64,
    pub limits: Limits,
    pub opponents: Vec<OpponentContext>,
}

impl BottomLevel<'_> {
    /// Map the aggregated command to a concrete target acceleration.
    ///
    /// Accelerate scans the grid from the strongest candidate down to the
    /// least and takes the first that keeps the comfort clearance against
    /// every opponent (falling back to holding speed). Decelerate scans from
    /// the mildest braking up and takes the first comfortable level (falling
    /// back to the braking limit). Emergency braking is fixed.
    pub fn choose(&self, command: Command) -> f64 {
        match command {
            Command::EmergencyBrake => self.act.a_aeb,
            Command::Accelerate => {
                let mut candidates = self.act.accel_grid();
                candidates.retain(|a| {
                    *a == 0.0 || self.host_speed + a * self.horizon <= self.act.v_max + 1e-9
                });
                candidates
                    .into_iter()
                    .rev()
                    .find(|a| self.comfortable(*a))
                    .unwrap_or(0.0)
            }
            Command::Decelerate => self
                .act
                .decel_grid()
                .into_iter()
                .find(|a| self.comfortable(*a))
                .unwrap_or(self.act.a_min),
        }
    }

    /// Evaluate the clearance a candidate keeps against every opponent held
    /// at its resolved strategy. A plan that ends with the late vehicle at a
    /// standstill clears by definition.
    fn comfortable(&self, candidate: f64) -> bool {
        self.opponents.iter().all(|opp| self.clearance(candidate, opp) >= self.comfort_gap)
    }

    fn clearance(&self, candidate: f64, opp: &OpponentContext) -> f64 {
        let lim = &self.limits;
        let host_state = MotionState { pos: 0.0, speed: self.host_speed, accel: candidate };
        let host_dist =
            kinematics::ConflictDistances::new(opp.host_near, self.host_length, opp.width);
        let host_times = kinematics::time_pair(&host_state, &host_dist, lim);

        let opp_state = MotionState { pos: 0.0, speed: opp.speed, accel: opp.expected_accel };
        let opp_dist = kinematics::ConflictDistances::new(opp.near, opp.length, self.host_width);
        let opp_times = kinematics::time_pair(&opp_state, &opp_dist, lim);

        let host_early = match kinematics::priority_order(
            host_times.arrival,
            opp_times.arrival,
            if opp.host_tie_priority {
                kinematics::Participant::A
            } else {
                kinematics::Participant::B
            },
        ) {
            kinematics::Participant::A => true,
            kinematics::Participant::B => false,
        };
        kinematics::residual_interval(&host_times, &opp_times, !host_early, lim)
    }
}

/// Convenience for tests and the style estimator: the reach outcome of a
/// strategy extrapolation.
pub fn strategy_reach(speed: f64, accel: f64, strategy: Strategy, ctx: &SubgameContext, dist: f64) -> Reach {
    let ea = expected_accel(accel, strategy, ctx.nominal_acc, ctx.nominal_dec);
    kinematics::reach(speed, ea, dist, &ctx.limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{self, StrategyPair};
    use approx::assert_abs_diff_eq;

    fn profile(sigma: f64) -> DriverProfile {
        DriverProfile::with_sigma(sigma)
    }

    fn snapshot(speed: f64, accel: f64, near: f64, sigma: f64) -> AgentSnapshot {
        AgentSnapshot { speed, accel, near, length: 4.5, width: 1.8, profile: profile(sigma) }
    }

    /// Both vehicles 60 m out at 40 km/h, host more safety-minded; the other
    /// vehicle holds tie priority (it comes from the host's right).
    fn baseline_ctx() -> SubgameContext {
        SubgameContext {
            host: snapshot(11.11, 0.0, 60.0, 0.6),
            other: snapshot(11.11, 0.0, 60.0, 0.5),
            host_tie_priority: false,
            horizon: 0.5,
            nominal_acc: 1.0,
            nominal_dec: 1.0,
            limits: Limits::default(),
        }
    }

    #[test]
    fn expected_accel_mapping() {
        assert_eq!(expected_accel(0.0, Strategy::Accelerate, 1.0, 1.0), 1.0);
        assert_eq!(expected_accel(3.68, Strategy::Accelerate, 1.0, 1.0), 3.68);
        assert_eq!(expected_accel(-2.0, Strategy::Accelerate, 1.0, 1.0), 1.0);
        assert_eq!(expected_accel(0.0, Strategy::Decelerate, 1.0, 1.0), -1.0);
        assert_eq!(expected_accel(-3.0, Strategy::Decelerate, 1.0, 1.0), -3.0);
    }

    #[test]
    fn symmetric_agents_give_role_swapped_matrix() {
        let mut ctx = baseline_ctx();
        ctx.host = snapshot(11.11, 0.0, 60.0, 0.5);
        let eval = evaluate(&ctx, 0.0);
        for pair in StrategyPair::ALL {
            let swapped = StrategyPair::new(pair.other, pair.host);
            let (h, _) = eval.matrix.get(pair);
            let (_, o) = eval.matrix.get(swapped);
            // Equal profiles and geometry: the host payoff of (s, t) equals
            // the other payoff of (t, s) up to the tie-priority asymmetry,
            // which only acts on exact arrival ties.
            assert_abs_diff_eq!(h, o, epsilon = 1e-9);
        }
    }

    #[test]
    fn baseline_first_subgame_resolves_to_host_accelerating() {
        let ctx = baseline_ctx();
        let eval = evaluate(&ctx, 0.0);
        let resolution = game::resolve(|boost| evaluate(&ctx, boost).matrix, None);
        // Two yield equilibria exist and the summed payoff prefers the
        // safety-minded host going first.
        assert!(resolution
            .equilibria
            .contains(&StrategyPair::new(Strategy::Accelerate, Strategy::Decelerate)));
        assert!(resolution
            .equilibria
            .contains(&StrategyPair::new(Strategy::Decelerate, Strategy::Accelerate)));
        assert_eq!(
            resolution.chosen,
            StrategyPair::new(Strategy::Accelerate, Strategy::Decelerate)
        );
        // Mutual acceleration predicts a collision and is valued as a loss
        // for both.
        let (uh, uo) = eval.matrix.get(StrategyPair::new(Strategy::Accelerate, Strategy::Accelerate));
        assert!(uh < eval.matrix.get(StrategyPair::new(Strategy::Accelerate, Strategy::Decelerate)).0);
        assert!(uo < eval.matrix.get(StrategyPair::new(Strategy::Decelerate, Strategy::Accelerate)).1);
    }

    #[test]
    fn cleared_opponent_leaves_speed_dominated_payoffs() {
        // Opponent tail already past the far edge: its passing time is zero,
        // every cell is maximally safe for the host, so the host's payoffs
        // order by speed.
        let mut ctx = baseline_ctx();
        ctx.other = snapshot(11.11, 0.0, -20.0, 0.5);
        let eval = evaluate(&ctx, 0.0);
        let acc = eval.matrix.get(StrategyPair::new(Strategy::Accelerate, Strategy::Decelerate)).0;
        let dec = eval.matrix.get(StrategyPair::new(Strategy::Decelerate, Strategy::Decelerate)).0;
        assert!(acc > dec);
        let a_s_acc = eval.cells[0][1].host.safety_adv;
        let a_s_dec = eval.cells[1][1].host.safety_adv;
        assert_abs_diff_eq!(a_s_acc, a_s_dec, epsilon = 1e-9);
    }

    #[test]
    fn bottom_level_maximizes_speed_under_huge_margin() {
        // Opponent decelerating far away: every acceleration level keeps the
        // clearance, so the grid maximum wins; a direct payoff sweep agrees.
        let act = Actuation::default();
        let ctx = baseline_ctx();
        let bl = BottomLevel {
            host_speed: 11.11,
            host_accel: 0.0,
            host_length: 4.5,
            host_width: 1.8,
            act: &act,
            horizon: 0.5,
            comfort_gap: 1.5,
            nominal_acc: 1.0,
            nominal_dec: 1.0,
            limits: Limits::default(),
            opponents: vec![OpponentContext {
                speed: 5.0,
                accel: -1.0,
                length: 4.5,
                width: 1.8,
                near: 200.0,
                host_near: 30.0,
                strategy: Strategy::Decelerate,
                host_tie_priority: true,
            }],
        };
        assert_eq!(bl.choose(Command::Accelerate), 2.0);

        // Direct evaluation: discounted payoff over the grid peaks at the
        // grid maximum in this regime.
        let mut best = f64::NEG_INFINITY;
        let mut best_a = -1.0;
        for a in act.accel_grid() {
            let mut c = ctx;
            c.host.near = 30.0;
            c.other = snapshot(5.0, -1.0, 200.0, 0.5);
            let eval_ctx = SubgameContext { host_tie_priority: false, ..c };
            let ea = expected_accel(0.0, Strategy::Accelerate, a.max(0.01), 1.0);
            let ht = cell_times(c.host.speed, ea, 30.0, 36.3, &c.limits);
            let ot = cell_times(5.0, -1.0, 200.0, 206.3, &c.limits);
            let dt = cell_residual(&ht, &ot, false, c.host.profile.dt_sat);
            let dt_now = current_residual(&eval_ctx);
            let a_s = payoff::safety_advantage(dt, dt_now.clamp(-2.0, 2.0), &c.host.profile);
            let v = payoff::speed_advantage(c.host.speed, ea, 0.5, &c.host.profile);
            let p = payoff::acceleration_tendency(ht.arrival, ot.arrival, &c.host.profile);
            let u = payoff::strategy_payoff(a_s, v, p, &c.host.profile).discounted;
            if u > best {
                best = u;
                best_a = a;
            }
        }
        assert_eq!(best_a, 2.0);
    }

    #[test]
    fn bottom_level_brakes_minimally_when_everything_clears() {
        let act = Actuation::default();
        let bl = BottomLevel {
            host_speed: 10.0,
            host_accel: 0.0,
            host_length: 4.5,
            host_width: 1.8,
            act: &act,
            horizon: 0.5,
            comfort_gap: 1.5,
            nominal_acc: 1.0,
            nominal_dec: 1.0,
            limits: Limits::default(),
            opponents: vec![OpponentContext {
                speed: 15.0,
                accel: 0.0,
                length: 4.5,
                width: 1.8,
                near: 20.0,
                host_near: 80.0,
                strategy: Strategy::Accelerate,
                host_tie_priority: false,
            }],
        };
        assert_eq!(bl.choose(Command::Decelerate), -0.5);
    }

    #[test]
    fn bottom_level_fallbacks() {
        let act = Actuation::default();
        // A conflicted same-state race: no candidate keeps the comfort gap.
        let bl = BottomLevel {
            host_speed: 27.78,
            host_accel: 0.0,
            host_length: 4.5,
            host_width: 1.8,
            act: &act,
            horizon: 0.5,
            comfort_gap: 1.5,
            nominal_acc: 1.0,
            nominal_dec: 1.0,
            limits: Limits::default(),
            opponents: vec![OpponentContext {
                speed: 27.78,
                accel: 1.0,
                length: 4.5,
                width: 1.8,
                near: 60.0,
                host_near: 60.0,
                strategy: Strategy::Accelerate,
                host_tie_priority: false,
            }],
        };
        assert_eq!(bl.choose(Command::Decelerate), act.a_min);
        assert_eq!(bl.choose(Command::Accelerate), 0.0);
        assert_eq!(bl.choose(Command::EmergencyBrake), act.a_aeb);
    }

    #[test]
    fn accelerate_near_speed_cap_drops_hot_candidates() {
        let act = Actuation::default();
        let bl = BottomLevel {
            host_speed: act.v_max - 0.4,
            host_accel: 0.0,
            host_length: 4.5,
            host_width: 1.8,
            act: &act,
            horizon: 0.5,
            comfort_gap: 1.5,
            nominal_acc: 1.0,
            nominal_dec: 1.0,
            limits: Limits::default(),
            opponents: Vec::new(),
        };
        let a = bl.choose(Command::Accelerate);
        assert!(a <= 0.8 + 1e-9, "candidate {a} would exceed the speed cap");
        assert!(a > 0.0);
    }
}
