//! Scenario generators for the three experiment families, and the summary
//! statistics derived from batches of runs.

use crate::coordinator::{Arm, IntersectionLayout, Maneuver};
use crate::payoff::DriverProfile;
use crate::plant::{Actuation, VehicleDims};
use crate::sim::{AgentSpec, ModelParams, RunResult, ScenarioSpec, SimParams, Start};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub fn kmh(v: f64) -> f64 {
    v / 3.6
}

fn two_vehicle_agent(arm: Arm, dist: f64, v0: f64, sigma: f64) -> AgentSpec {
    AgentSpec {
        arm,
        maneuver: Maneuver::Straight,
        start: Start::ConflictDistance(dist),
        v0,
        a0: 0.0,
        profile: DriverProfile::with_sigma(sigma),
        dims: VehicleDims::default(),
        act: Actuation::default(),
    }
}

/// Two perpendicular straight-through vehicles; vehicle B approaches from
/// vehicle A's right and holds tie priority.
pub fn two_vehicle_spec(d_a: f64, d_b: f64, v_a: f64, v_b: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        agents: vec![
            two_vehicle_agent(Arm::South, d_a, v_a, 0.6),
            two_vehicle_agent(Arm::East, d_b, v_b, 0.5),
        ],
        layout: IntersectionLayout::default(),
        sim: SimParams { stop_at_first_arrival: true, ..SimParams::default() },
        model: ModelParams::default(),
        seed,
    }
}

/// A labelled scenario of one experiment family.
#[derive(Debug, Clone, Serialize)]
pub struct LabelledSpec {
    pub label: String,
    /// Free-form numeric tags for table/plot columns (setup id, speeds,
    /// distances, group parameter).
    pub tags: Vec<(&'static str, f64)>,
    pub spec: ScenarioSpec,
}

/// Equal-distance equal-speed limit cases: two distance setups (60 m and
/// 50 m) swept over initial speeds 40..=100 km/h.
pub fn gen_limit_grid(seed: u64) -> Vec<LabelledSpec> {
    let mut out = Vec::new();
    for (setup, d) in [(1u32, 60.0), (2u32, 50.0)] {
        for speed_kmh in (40..=100).step_by(10) {
            let v = kmh(speed_kmh as f64);
            let case_seed =
                seed ^ (u64::from(setup) << 32) ^ (speed_kmh as u64);
            out.push(LabelledSpec {
                label: format!("setup{setup}_v{speed_kmh}"),
                tags: vec![
                    ("setup", f64::from(setup)),
                    ("v_kmh", speed_kmh as f64),
                    ("d0", d),
                ],
                spec: two_vehicle_spec(d, d, v, v, case_seed),
            });
        }
    }
    out
}

/// The residual-clearance sweep: B's initial distance steps through
/// 40..=100 m while A starts `x` meters offset, both at 40 km/h.
pub fn gen_clearance_sweep(seed: u64) -> Vec<LabelledSpec> {
    let v = kmh(40.0);
    let mut out = Vec::new();
    for d_b in (40..=100).step_by(10) {
        for x in -20..=20 {
            let d_a = f64::from(d_b) + f64::from(x);
            let case_seed = seed ^ ((d_b as u64) << 32) ^ ((x + 21) as u64);
            out.push(LabelledSpec {
                label: format!("db{d_b}_x{x}"),
                tags: vec![("d_b0", f64::from(d_b)), ("x", f64::from(x))],
                spec: two_vehicle_spec(d_a, f64::from(d_b), v, v, case_seed),
            });
        }
    }
    out
}

/// Cardinality of the sampled-case grid before the distance constraint.
pub fn uniform_grid_len() -> usize {
    41 * 41 * 51
}

/// Uniformly sampled two-vehicle cases with nearly equal times to the
/// conflict area. `count` of the full grid are drawn without replacement;
/// passing the full grid length keeps every point. The decision interval is
/// one second for these cases.
pub fn gen_uniform_cases(count: usize, seed: u64) -> Vec<LabelledSpec> {
    let grid_len = uniform_grid_len();
    let n = count.min(grid_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = if n == grid_len {
        (0..grid_len).collect()
    } else {
        sample(&mut rng, grid_len, n).into_vec()
    };
    picks.sort_unstable();

    picks
        .into_iter()
        .map(|idx| {
            let d_a_i = idx / (41 * 51);
            let v_a_i = (idx / 51) % 41;
            let v_b_i = idx % 51;
            let d_a = 40.0 + d_a_i as f64;
            let v_a = 9.0 + 0.1 * v_a_i as f64;
            let v_b = v_a - 2.5 + 0.1 * v_b_i as f64;

            // d_B in the band that keeps the nominal time gap below half a
            // second, drawn per-case from its own stream.
            let mut case_rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let t_a = d_a / v_a;
            let lo = ((t_a - 0.5) * v_b).max(10.0);
            let hi = ((t_a + 0.5) * v_b).max(lo + 1e-6);
            let d_b = case_rng.gen_range(lo..hi);

            let mut spec = two_vehicle_spec(d_a, d_b, v_a, v_b, case_rng.gen());
            spec.sim.subgame_period = 1.0;
            LabelledSpec {
                label: format!("case{idx}"),
                tags: vec![("d_a0", d_a), ("v_a0", v_a), ("v_b0", v_b), ("d_b0", d_b)],
                spec,
            }
        })
        .collect()
}

fn four_av_agent(arm: Arm, tts: f64, v0: f64, a0: f64) -> AgentSpec {
    AgentSpec {
        arm,
        maneuver: Maneuver::Straight,
        start: Start::TimeToStopline(tts),
        v0,
        a0,
        profile: DriverProfile::with_sigma(0.5),
        dims: VehicleDims::default(),
        act: Actuation::default(),
    }
}

/// Four straight-through vehicles, one per arm, with times-to-stopline of
/// `6 + mu * U(0,1)` seconds, speeds `U(10,14)` and initial accelerations
/// `U(0,4)`.
pub fn gen_four_av_cases(mu: f64, count: usize, seed: u64) -> Vec<LabelledSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((mu as u64) << 48));
    (0..count)
        .map(|i| {
            let mut agents = Vec::with_capacity(4);
            for arm in [Arm::South, Arm::East, Arm::North, Arm::West] {
                let tts = 6.0 + mu * rng.gen_range(0.0..1.0);
                let v0 = rng.gen_range(10.0..14.0);
                let a0 = rng.gen_range(0.0..4.0);
                agents.push(four_av_agent(arm, tts, v0, a0));
            }
            let spec = ScenarioSpec {
                agents,
                layout: IntersectionLayout::default(),
                sim: SimParams::default(),
                model: ModelParams::default(),
                seed: rng.gen(),
            };
            LabelledSpec {
                label: format!("mu{mu}_case{i}"),
                tags: vec![("mu", mu), ("case", i as f64)],
                spec,
            }
        })
        .collect()
}

/// The worked four-vehicle example: all times-to-stopline at 6 s with the
/// published speeds and initial accelerations.
pub fn four_av_worked_case(seed: u64) -> ScenarioSpec {
    let v = [11.87, 13.58, 12.54, 10.50];
    let a = [3.68, 2.35, 2.15, 0.33];
    let arms = [Arm::South, Arm::East, Arm::North, Arm::West];
    ScenarioSpec {
        agents: (0..4).map(|i| four_av_agent(arms[i], 6.0, v[i], a[i])).collect(),
        layout: IntersectionLayout::default(),
        sim: SimParams::default(),
        model: ModelParams::default(),
        seed,
    }
}

/// Expected uncontrolled benchmark clearing time for a TTS bandwidth.
pub fn benchmark_clearing_time(mu: f64) -> f64 {
    7.2037 + 0.8 * mu
}

/// Statistics of one four-vehicle group.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GroupStats {
    pub mu: f64,
    pub count: usize,
    pub successes: usize,
    pub success_rate: Option<f64>,
    /// Mean intersection clearing time over successful runs.
    pub t_mic: Option<f64>,
    pub t_eic0: f64,
    /// Potential time-efficiency improvement, percent.
    pub eta_te: Option<f64>,
}

pub fn aggregate_stats(results: &[RunResult], mu: f64) -> GroupStats {
    let count = results.len();
    let successes = results.iter().filter(|r| r.success).count();
    let t_eic0 = benchmark_clearing_time(mu);
    let cleared: Vec<f64> =
        results.iter().filter(|r| r.success).filter_map(|r| r.t_ic).collect();
    let t_mic = if cleared.is_empty() {
        None
    } else {
        Some(cleared.iter().sum::<f64>() / cleared.len() as f64)
    };
    GroupStats {
        mu,
        count,
        successes,
        success_rate: if count == 0 { None } else { Some(successes as f64 / count as f64) },
        t_mic,
        t_eic0,
        eta_te: t_mic.map(|t| (t_eic0 - t) / t_eic0 * 100.0),
    }
}

/// Summary of a batch of two-vehicle sampled cases.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct UniformStats {
    pub count: usize,
    pub successes: usize,
    pub success_rate: Option<f64>,
    /// Runs whose residual clearance fell below the judgement limit.
    pub below_judgement: usize,
    /// Runs whose residual clearance was strictly negative (or that ended in
    /// emergency braking or a timeout).
    pub collisions: usize,
    pub mean_delta_d: Option<f64>,
    pub mean_t_f: Option<f64>,
}

pub fn uniform_stats(results: &[RunResult]) -> UniformStats {
    let count = results.len();
    let successes = results.iter().filter(|r| r.success).count();
    let below = results
        .iter()
        .filter(|r| r.aeb || r.timed_out || r.min_delta_d.map_or(true, |d| d < 3.0))
        .count();
    let collisions = results
        .iter()
        .filter(|r| r.aeb || r.timed_out || r.min_delta_d.map_or(true, |d| d < 0.0))
        .count();
    let deltas: Vec<f64> = results.iter().filter_map(|r| r.min_delta_d).collect();
    let tfs: Vec<f64> = results.iter().filter_map(|r| r.t_f).collect();
    UniformStats {
        count,
        successes,
        success_rate: if count == 0 { None } else { Some(successes as f64 / count as f64) },
        below_judgement: below,
        collisions,
        mean_delta_d: mean(&deltas),
        mean_t_f: mean(&tfs),
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}
