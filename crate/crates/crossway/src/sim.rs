//! Closed-loop scenario simulation: decisions every subgame period, plant
//! integration and emergency-braking checks every millisecond, and the
//! safety/efficiency metrics of the run.

use crate::coordinator::{self, Arm, Command, IntersectionLayout, LanePath, Maneuver, PathIntent};
use crate::game::{self, CaseId, PayoffMatrix, Strategy, StrategyPair};
use crate::kinematics::{self, Limits, MotionState};
use crate::payoff::DriverProfile;
use crate::plant::{self, Actuation, AebView, VehicleAgent, VehicleDims};
use crate::subgame::{self, AgentSnapshot, BottomLevel, OpponentContext, SubgameContext};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// How an agent's initial position is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Head distance to the near edge of the conflict square shared with the
    /// other vehicle (two-vehicle scenarios only).
    ConflictDistance(f64),
    /// Head distance to the stopline.
    StoplineDistance(f64),
    /// Time to stopline at the nominal initial speed.
    TimeToStopline(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSpec {
    pub arm: Arm,
    pub maneuver: Maneuver,
    pub start: Start,
    pub v0: f64,
    pub a0: f64,
    pub profile: DriverProfile,
    #[serde(default)]
    pub dims: VehicleDims,
    #[serde(default)]
    pub act: Actuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Subgame duration and decision interval, s.
    pub subgame_period: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Hard wall-clock limit of simulated time, s.
    pub timeout: f64,
    /// Standard deviation of the one-shot initial speed disturbance, m/s.
    pub disturbance_sd: f64,
    /// End the run when the early vehicle of a pair reaches the conflict
    /// square (the two-vehicle limit-case convention).
    pub stop_at_first_arrival: bool,
    pub record_trajectory: bool,
    /// Steps between trajectory samples.
    pub trajectory_stride: usize,
    /// Enable the opponent-style estimator.
    pub style_id: bool,
    /// Compensation gain of the style estimator, per m/s^2.
    pub k_sigma: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            subgame_period: 0.5,
            dt: 1e-3,
            timeout: 60.0,
            disturbance_sd: 0.001f64.sqrt(),
            stop_at_first_arrival: false,
            record_trajectory: false,
            trajectory_stride: 10,
            style_id: false,
            k_sigma: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub limits: Limits,
    /// Minimum predicted clearance the bottom level treats as comfortable, s.
    pub comfort_gap: f64,
    /// Representative strategy accelerations, positive magnitudes, m/s^2.
    pub nominal_acc: f64,
    pub nominal_dec: f64,
    /// Residual clearance below which a run counts as failed, m.
    pub judgement_limit: f64,
    /// Stopping-margin used by the emergency-braking trigger, m.
    pub aeb_margin: f64,
    /// Predicted overlap (s) that must be exceeded before emergency braking
    /// arms; filters transient sub-threshold dips.
    pub aeb_dt_threshold: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            limits: Limits::default(),
            comfort_gap: 1.5,
            nominal_acc: 1.0,
            nominal_dec: 1.0,
            judgement_limit: 3.0,
            aeb_margin: 3.0,
            aeb_dt_threshold: 0.3,
        }
    }
}

/// Full description of one run; the result is a pure function of this value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub layout: IntersectionLayout,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub model: ModelParams,
    pub seed: u64,
}

/// First arrival at a shared conflict square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEvent {
    pub early: usize,
    pub late: usize,
    pub rect_index: usize,
    pub t: f64,
    /// Late vehicle's remaining distance to the square at that instant.
    pub delta_d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecisionRecord {
    pub t: f64,
    pub host: usize,
    pub opponent: usize,
    pub rect_index: usize,
    pub case_id: CaseId,
    pub escalations: u32,
    pub equilibria: Vec<StrategyPair>,
    pub chosen: StrategyPair,
    pub matrix: PayoffMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommandRecord {
    pub t: f64,
    pub agent: usize,
    pub command: Command,
    pub a_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajSample {
    pub t: f64,
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub pair_events: Vec<PairEvent>,
    /// Time of the last pair interaction event (the interaction duration for
    /// two-vehicle runs).
    pub t_f: Option<f64>,
    /// Time when the slowest vehicle had fully passed the intersection.
    pub t_ic: Option<f64>,
    pub min_delta_d: Option<f64>,
    pub success: bool,
    pub aeb: bool,
    pub timed_out: bool,
    pub panicked: bool,
    pub min_speed: Vec<f64>,
    pub clear_times: Vec<Option<f64>>,
    pub decisions: Vec<DecisionRecord>,
    pub commands: Vec<CommandRecord>,
    pub trajectories: Option<Vec<Vec<TrajSample>>>,
}

impl RunResult {
    pub fn failed_placeholder(n_agents: usize) -> Self {
        Self {
            pair_events: Vec::new(),
            t_f: None,
            t_ic: None,
            min_delta_d: None,
            success: false,
            aeb: false,
            timed_out: false,
            panicked: true,
            min_speed: vec![0.0; n_agents],
            clear_times: vec![None; n_agents],
            decisions: Vec::new(),
            commands: Vec::new(),
            trajectories: None,
        }
    }
}

struct PairState {
    a: usize,
    b: usize,
    rect_index: usize,
    a_entry_s: f64,
    b_entry_s: f64,
    /// True when agent `a` is the right-side vehicle of the pair.
    a_tie_priority: bool,
    last: Option<StrategyPair>,
    /// Per-side memory used when each agent resolves its own view.
    last_by_side: [Option<StrategyPair>; 2],
    event: Option<PairEvent>,
}

impl PairState {
    fn near(&self, which: usize, pos: f64) -> f64 {
        if which == self.a {
            self.a_entry_s - pos
        } else {
            self.b_entry_s - pos
        }
    }
}

/// Whether `x` approaches from the right-hand side of `y`.
fn right_of(x: Arm, y: Arm) -> bool {
    y.right_neighbor() == x
}

pub fn run_scenario(spec: &ScenarioSpec) -> RunResult {
    let intents: Vec<PathIntent> =
        spec.agents.iter().map(|a| PathIntent { arm: a.arm, maneuver: a.maneuver }).collect();
    let paths: Vec<LanePath> =
        intents.iter().map(|i| LanePath::build(&spec.layout, *i)).collect();
    let subproblems = coordinator::decompose(&intents, &spec.layout);

    // Flatten to unordered pair-rectangle states (host = lower index).
    let mut pairs: Vec<PairState> = Vec::new();
    for per_agent in &subproblems {
        for sp in per_agent {
            if sp.host < sp.opponent {
                pairs.push(PairState {
                    a: sp.host,
                    b: sp.opponent,
                    rect_index: sp.rect_index,
                    a_entry_s: sp.conflict.host_entry_s,
                    b_entry_s: sp.conflict.other_entry_s,
                    a_tie_priority: tie_priority(intents[sp.host].arm, intents[sp.opponent].arm),
                    last: None,
                    last_by_side: [None, None],
                    event: None,
                });
            }
        }
    }
    pairs.sort_by_key(|p| (p.a, p.b, p.rect_index));

    // Initial conditions: position per the declared start, then a one-shot
    // speed disturbance to break exact ties.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sim.disturbance_sd.max(0.0)).unwrap();
    let mut agents: Vec<VehicleAgent> = Vec::with_capacity(spec.agents.len());
    for (i, aspec) in spec.agents.iter().enumerate() {
        let pos0 = match aspec.start {
            Start::StoplineDistance(d) => -d,
            Start::TimeToStopline(tts) => -aspec.v0 * tts,
            Start::ConflictDistance(d) => {
                let pr = pairs
                    .iter()
                    .find(|p| p.a == i || p.b == i)
                    .expect("conflict-distance start requires a conflicting pair");
                let entry = if pr.a == i { pr.a_entry_s } else { pr.b_entry_s };
                entry - d
            }
        };
        let mut v0 = aspec.v0;
        if spec.sim.disturbance_sd > 0.0 {
            v0 = (v0 + noise.sample(&mut rng)).max(0.0);
        }
        agents.push(VehicleAgent::new(
            i,
            intents[i],
            MotionState { pos: pos0, speed: v0, accel: aspec.a0 },
            aspec.profile,
            aspec.dims,
            aspec.act,
        ));
    }

    // Opponent-style estimates (row: observer, column: observed).
    let n = agents.len();
    let mut sigma_est = vec![vec![0.5f64; n]; n];
    let mut predicted: Vec<Option<(Strategy, f64)>> = vec![None; pairs.len() * 2];

    let dt = spec.sim.dt;
    let steps_per_subgame = (spec.sim.subgame_period / dt).round().max(1.0) as u64;
    let total_steps = (spec.sim.timeout / dt).round() as u64;

    let mut decisions: Vec<DecisionRecord> = Vec::new();
    let mut commands: Vec<CommandRecord> = Vec::new();
    let mut trajectories: Option<Vec<Vec<TrajSample>>> =
        spec.sim.record_trajectory.then(|| vec![Vec::new(); n]);
    let mut clear_times: Vec<Option<f64>> = vec![None; n];
    let mut timed_out = false;
    let mut stop_now = false;

    for step in 0..=total_steps {
        let t = step as f64 * dt;

        // Style update from the previous subgame, then fresh decisions.
        if step % steps_per_subgame == 0 {
            if spec.sim.style_id && step > 0 {
                update_style_estimates(
                    &spec.model,
                    spec.sim.k_sigma,
                    &agents,
                    &pairs,
                    &mut sigma_est,
                    &mut predicted,
                );
            }
            decide(
                spec,
                t,
                &agents,
                &mut pairs,
                &sigma_est,
                &mut predicted,
                &mut decisions,
                &mut commands,
            )
            .into_iter()
            .enumerate()
            .for_each(|(i, target)| {
                if let Some(a_target) = target {
                    agents[i].a_target = a_target;
                }
            });
        }

        // Emergency-braking scan on current states.
        aeb_scan(spec, &mut agents, &pairs);

        for agent in &mut agents {
            agent.step(dt);
        }
        let t_next = t + dt;

        // First-arrival events per pair square.
        for pr in &mut pairs {
            if pr.event.is_some() {
                continue;
            }
            let near_a = pr.near(pr.a, agents[pr.a].motion.pos);
            let near_b = pr.near(pr.b, agents[pr.b].motion.pos);
            if near_a <= 0.0 || near_b <= 0.0 {
                let a_first = if near_a <= 0.0 && near_b <= 0.0 {
                    // Same-step double arrival: deeper head wins, ties to the
                    // right-side vehicle.
                    if near_a < near_b {
                        true
                    } else if near_b < near_a {
                        false
                    } else {
                        pr.a_tie_priority
                    }
                } else {
                    near_a <= 0.0
                };
                let (early, late, delta_d) = if a_first {
                    (pr.a, pr.b, near_b)
                } else {
                    (pr.b, pr.a, near_a)
                };
                pr.event = Some(PairEvent {
                    early,
                    late,
                    rect_index: pr.rect_index,
                    t: t_next,
                    delta_d: delta_d.max(0.0),
                });
                if spec.sim.stop_at_first_arrival {
                    stop_now = true;
                }
            }
        }

        for (i, agent) in agents.iter().enumerate() {
            if clear_times[i].is_none()
                && agent.motion.pos - agent.dims.length >= paths[i].box_exit_s
            {
                clear_times[i] = Some(t_next);
            }
        }

        if let Some(trajs) = trajectories.as_mut() {
            if step % spec.sim.trajectory_stride as u64 == 0 {
                for (i, agent) in agents.iter().enumerate() {
                    trajs[i].push(TrajSample {
                        t,
                        pos: agent.motion.pos,
                        speed: agent.motion.speed,
                        accel: agent.motion.accel,
                    });
                }
            }
        }

        if stop_now || clear_times.iter().all(|c| c.is_some()) {
            break;
        }
        if step == total_steps {
            timed_out = true;
        }
    }

    let pair_events: Vec<PairEvent> = pairs.iter().filter_map(|p| p.event).collect();
    let min_delta_d = pair_events.iter().map(|e| e.delta_d).fold(None, |acc: Option<f64>, d| {
        Some(acc.map_or(d, |m| m.min(d)))
    });
    let aeb = agents.iter().any(|a| a.aeb_fired);
    let all_cleared = clear_times.iter().all(|c| c.is_some());
    let complete = if spec.sim.stop_at_first_arrival {
        pairs.is_empty() && all_cleared || pairs.iter().all(|p| p.event.is_some())
    } else {
        all_cleared
    };
    let success = !aeb
        && !timed_out
        && complete
        && min_delta_d.map_or(true, |d| d >= spec.model.judgement_limit);

    RunResult {
        t_f: pair_events.iter().map(|e| e.t).fold(None, |acc: Option<f64>, t| {
            Some(acc.map_or(t, |m| m.max(t)))
        }),
        t_ic: if all_cleared {
            clear_times.iter().map(|c| c.unwrap()).fold(None, |acc: Option<f64>, t| {
                Some(acc.map_or(t, |m| m.max(t)))
            })
        } else {
            None
        },
        pair_events,
        min_delta_d,
        success,
        aeb,
        timed_out,
        panicked: false,
        min_speed: agents.iter().map(|a| a.min_speed_seen).collect(),
        clear_times,
        decisions,
        commands,
        trajectories,
    }
}

fn tie_priority(a: Arm, b: Arm) -> bool {
    if right_of(a, b) {
        true
    } else if right_of(b, a) {
        false
    } else {
        // Opposite arms: no right-side rule applies; lower index yields
        // priority deterministically.
        true
    }
}

/// A pair is live while neither tail has cleared the shared square.
fn pair_active(pr: &PairState, agents: &[VehicleAgent]) -> bool {
    let a = &agents[pr.a];
    let b = &agents[pr.b];
    let far_a = pr.near(pr.a, a.motion.pos) + a.dims.length + b.dims.width;
    let far_b = pr.near(pr.b, b.motion.pos) + b.dims.length + a.dims.width;
    far_a > 0.0 && far_b > 0.0
}

fn snapshot(agent: &VehicleAgent, near: f64, profile: DriverProfile) -> AgentSnapshot {
    AgentSnapshot {
        speed: agent.motion.speed,
        accel: agent.motion.accel,
        near,
        length: agent.dims.length,
        width: agent.dims.width,
        profile,
    }
}

#[allow(clippy::too_many_arguments)]
fn decide(
    spec: &ScenarioSpec,
    t: f64,
    agents: &[VehicleAgent],
    pairs: &mut [PairState],
    sigma_est: &[Vec<f64>],
    predicted: &mut [Option<(Strategy, f64)>],
    decisions: &mut Vec<DecisionRecord>,
    commands: &mut Vec<CommandRecord>,
) -> Vec<Option<f64>> {
    let n = agents.len();
    let mut choices: Vec<Vec<Strategy>> = vec![Vec::new(); n];
    let mut exhausted_conflict = vec![false; n];
    let mut opponents: Vec<Vec<OpponentContext>> = vec![Vec::new(); n];

    for (pi, pr) in pairs.iter_mut().enumerate() {
        if !pair_active(pr, agents) {
            continue;
        }
        let near_a = pr.near(pr.a, agents[pr.a].motion.pos);
        let near_b = pr.near(pr.b, agents[pr.b].motion.pos);

        let sides: Vec<(usize, usize, f64, f64, bool)> = if spec.sim.style_id {
            vec![
                (pr.a, pr.b, near_a, near_b, pr.a_tie_priority),
                (pr.b, pr.a, near_b, near_a, !pr.a_tie_priority),
            ]
        } else {
            vec![(pr.a, pr.b, near_a, near_b, pr.a_tie_priority)]
        };

        for (side_idx, (host, opp, near_h, near_o, host_tie)) in sides.into_iter().enumerate() {
            let opp_profile = if spec.sim.style_id {
                agents[opp].profile.reweighted(sigma_est[host][opp])
            } else {
                agents[opp].profile
            };
            let ctx = SubgameContext {
                host: snapshot(&agents[host], near_h, agents[host].profile),
                other: snapshot(&agents[opp], near_o, opp_profile),
                host_tie_priority: host_tie,
                horizon: spec.sim.subgame_period,
                nominal_acc: spec.model.nominal_acc,
                nominal_dec: spec.model.nominal_dec,
                limits: spec.model.limits,
            };
            let last = if spec.sim.style_id { pr.last_by_side[side_idx] } else { pr.last };
            let resolution = game::resolve(|boost| subgame::evaluate(&ctx, boost).matrix, last);
            if spec.sim.style_id {
                pr.last_by_side[side_idx] = Some(resolution.chosen);
                predicted[pi * 2 + side_idx] =
                    Some((resolution.chosen.other, agents[opp].motion.accel));
            } else {
                pr.last = Some(resolution.chosen);
            }

            let fallback =
                resolution.equilibria.is_empty() && resolution.case_id == CaseId::Escalated;
            let dt_now = subgame::current_residual(&ctx);
            if fallback && dt_now < 0.0 {
                exhausted_conflict[host] = true;
            }
            choices[host].push(resolution.chosen.host);
            opponents[host].push(OpponentContext {
                speed: agents[opp].motion.speed,
                accel: agents[opp].motion.accel,
                length: agents[opp].dims.length,
                width: agents[opp].dims.width,
                near: near_o,
                host_near: near_h,
                strategy: resolution.chosen.other,
                host_tie_priority: host_tie,
            });
            if !spec.sim.style_id {
                // Mirror the shared resolution onto the other side.
                choices[opp].push(resolution.chosen.other);
                if fallback && dt_now < 0.0 {
                    exhausted_conflict[opp] = true;
                }
                opponents[opp].push(OpponentContext {
                    speed: agents[host].motion.speed,
                    accel: agents[host].motion.accel,
                    length: agents[host].dims.length,
                    width: agents[host].dims.width,
                    near: near_h,
                    host_near: near_o,
                    strategy: resolution.chosen.host,
                    host_tie_priority: !host_tie,
                });
            }

            decisions.push(DecisionRecord {
                t,
                host,
                opponent: opp,
                rect_index: pr.rect_index,
                case_id: resolution.case_id,
                escalations: resolution.escalation_steps,
                equilibria: resolution.equilibria.clone(),
                chosen: resolution.chosen,
                matrix: resolution.matrix,
            });
        }
    }

    let mut targets: Vec<Option<f64>> = vec![None; n];
    for i in 0..n {
        if agents[i].aeb_latched {
            continue;
        }
        let command = coordinator::aggregate(&choices[i], exhausted_conflict[i]);
        let bottom = BottomLevel {
            host_speed: agents[i].motion.speed,
            host_accel: agents[i].motion.accel,
            host_length: agents[i].dims.length,
            host_width: agents[i].dims.width,
            act: &agents[i].act,
            horizon: spec.sim.subgame_period,
            comfort_gap: spec.model.comfort_gap,
            nominal_acc: spec.model.nominal_acc,
            nominal_dec: spec.model.nominal_dec,
            limits: spec.model.limits,
            opponents: std::mem::take(&mut opponents[i]),
        };
        let a_target = bottom.choose(command);
        commands.push(CommandRecord { t, agent: i, command, a_target });
        targets[i] = Some(a_target);
    }
    targets
}

/// Emergency braking: scan live pairs, latch the late vehicle of any pair
/// whose predicted overlap and stopping distance both exceed their bounds,
/// and release latches whose conflicts have resolved.
fn aeb_scan(spec: &ScenarioSpec, agents: &mut [VehicleAgent], pairs: &[PairState]) {
    let lim = &spec.model.limits;
    let n = agents.len();
    let mut fire = vec![false; n];
    let mut still_dangerous = vec![false; n];

    for pr in pairs {
        if !pair_active(pr, agents) {
            continue;
        }
        let a = &agents[pr.a];
        let b = &agents[pr.b];
        let near_a = pr.near(pr.a, a.motion.pos);
        let near_b = pr.near(pr.b, b.motion.pos);
        let ta = kinematics::time_pair(
            &a.motion,
            &kinematics::ConflictDistances::new(near_a, a.dims.length, b.dims.width),
            lim,
        );
        let tb = kinematics::time_pair(
            &b.motion,
            &kinematics::ConflictDistances::new(near_b, b.dims.length, a.dims.width),
            lim,
        );
        let a_early = match kinematics::priority_order(
            ta.arrival,
            tb.arrival,
            if pr.a_tie_priority { kinematics::Participant::A } else { kinematics::Participant::B },
        ) {
            kinematics::Participant::A => true,
            kinematics::Participant::B => false,
        };
        let (late_idx, late_near, late_speed) = if a_early {
            (pr.b, near_b, b.motion.speed)
        } else {
            (pr.a, near_a, a.motion.speed)
        };
        let dt_now = if a_early {
            kinematics::residual_interval(&tb, &ta, true, lim)
        } else {
            kinematics::residual_interval(&ta, &tb, true, lim)
        };
        if dt_now < 0.0 {
            still_dangerous[late_idx] = true;
        }
        let view = AebView {
            dt_now,
            host_is_late: true,
            d_near: late_near,
            speed: late_speed,
        };
        if plant::aeb_check(&view, &agents[late_idx].act, spec.model.aeb_margin, spec.model.aeb_dt_threshold)
        {
            fire[late_idx] = true;
        }
    }

    for (i, agent) in agents.iter_mut().enumerate() {
        if fire[i] {
            agent.aeb_latched = true;
            agent.aeb_fired = true;
        } else if agent.aeb_latched && !still_dangerous[i] {
            agent.aeb_latched = false;
        }
    }
}

fn update_style_estimates(
    model: &ModelParams,
    k_sigma: f64,
    agents: &[VehicleAgent],
    pairs: &[PairState],
    sigma_est: &mut [Vec<f64>],
    predicted: &mut [Option<(Strategy, f64)>],
) {
    for (pi, pr) in pairs.iter().enumerate() {
        for (side_idx, (observer, observed)) in [(pr.a, pr.b), (pr.b, pr.a)].into_iter().enumerate()
        {
            if let Some((strategy, accel_at_decision)) = predicted[pi * 2 + side_idx].take() {
                let a_expected = subgame::expected_accel(
                    accel_at_decision,
                    strategy,
                    model.nominal_acc,
                    model.nominal_dec,
                );
                let a_observed = agents[observed].motion.accel;
                sigma_est[observer][observed] = game::update_style(
                    sigma_est[observer][observed],
                    a_observed,
                    a_expected,
                    k_sigma,
                );
            }
        }
    }
}
