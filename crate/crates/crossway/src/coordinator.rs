//! Four-arm intersection geometry: lane-center paths, conflict rectangles
//! where paths cross, decomposition of a multi-vehicle problem into
//! two-vehicle subproblems, and conservative strategy aggregation.

use crate::game::Strategy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Compass approach of a vehicle (the arm it comes from).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    North,
    East,
    South,
    West,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::South, Arm::East, Arm::North, Arm::West];

    /// Arm whose traffic approaches from this arm's right-hand side.
    pub fn right_neighbor(self) -> Arm {
        match self {
            Arm::South => Arm::East,
            Arm::East => Arm::North,
            Arm::North => Arm::West,
            Arm::West => Arm::South,
        }
    }

    /// Quarter turns that map the South-arm template onto this arm.
    fn rotations(self) -> usize {
        match self {
            Arm::South => 0,
            Arm::East => 1,
            Arm::North => 2,
            Arm::West => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Maneuver {
    Left,
    Right,
    Straight,
}

/// A vehicle's determined route through the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathIntent {
    pub arm: Arm,
    pub maneuver: Maneuver,
}

/// One-lane-per-approach four-arm layout. The central box spans
/// `[-lane_width, lane_width]` on both axes; approach lanes run at
/// `±lane_width / 2`. The stopline sits `stopline_offset` meters before the
/// box edge, which for straight paths is also the first conflict-rectangle
/// edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntersectionLayout {
    pub lane_width: f64,
    pub stopline_offset: f64,
}

impl Default for IntersectionLayout {
    fn default() -> Self {
        Self { lane_width: 3.5, stopline_offset: 0.0 }
    }
}

const APPROACH_LEN: f64 = 1_000.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("vehicles from the same arm follow, not cross; no conflict geometry")]
    SameApproach,
}

/// A lane-width square where two paths cross, with each vehicle's arc
/// distance from its stopline to the square's near edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairConflict {
    pub center: [f64; 2],
    pub half_width: f64,
    /// Arc position (stopline frame) at which the first path enters the square.
    pub host_entry_s: f64,
    pub other_entry_s: f64,
}

/// Lane-center polyline of one intent, in the stopline arc frame.
#[derive(Debug, Clone)]
pub struct LanePath {
    points: Vec<[f64; 2]>,
    /// Cumulative length from the polyline start to the stopline.
    stopline_cum: f64,
    /// Arc position where the path leaves the central box.
    pub box_exit_s: f64,
}

impl LanePath {
    pub fn build(layout: &IntersectionLayout, intent: PathIntent) -> LanePath {
        let w = layout.lane_width;
        let h = w / 2.0;
        // South-arm template, heading +y.
        let template: Vec<[f64; 2]> = match intent.maneuver {
            Maneuver::Straight => vec![[h, -APPROACH_LEN], [h, APPROACH_LEN]],
            Maneuver::Right => vec![[h, -APPROACH_LEN], [h, -h], [APPROACH_LEN, -h]],
            Maneuver::Left => vec![[h, -APPROACH_LEN], [h, h], [-APPROACH_LEN, h]],
        };
        let points: Vec<[f64; 2]> =
            template.iter().map(|p| rotate(*p, intent.arm.rotations())).collect();
        let stopline_cum = APPROACH_LEN - w - layout.stopline_offset;
        let box_exit_cum = box_exit_cum(&points, w);
        LanePath { points, stopline_cum, box_exit_s: box_exit_cum - stopline_cum }
    }

    /// Map an arc position to plane coordinates (for trajectory export).
    pub fn locate(&self, s: f64) -> [f64; 2] {
        let mut remaining = s + self.stopline_cum;
        for seg in self.points.windows(2) {
            let len = dist(seg[0], seg[1]);
            if remaining <= len {
                let f = (remaining / len).clamp(0.0, 1.0);
                return [
                    seg[0][0] + f * (seg[1][0] - seg[0][0]),
                    seg[0][1] + f * (seg[1][1] - seg[0][1]),
                ];
            }
            remaining -= len;
        }
        *self.points.last().unwrap()
    }
}

fn rotate(p: [f64; 2], quarter_turns: usize) -> [f64; 2] {
    let mut q = p;
    for _ in 0..quarter_turns {
        q = [-q[1], q[0]];
    }
    q
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn box_exit_cum(points: &[[f64; 2]], w: f64) -> f64 {
    let inside = |p: [f64; 2]| p[0].abs() <= w + 1e-9 && p[1].abs() <= w + 1e-9;
    let mut cum = 0.0;
    let mut exit = 0.0;
    for seg in points.windows(2) {
        let len = dist(seg[0], seg[1]);
        // Axis-aligned segments: find where the segment crosses the box
        // boundary outward.
        if inside(seg[0]) || inside(seg[1]) || crosses_box(seg[0], seg[1], w) {
            for i in 0..2 {
                if (seg[0][i] - seg[1][i]).abs() > 1e-9 {
                    let dir = (seg[1][i] - seg[0][i]).signum();
                    let edge = dir * w;
                    let t = (edge - seg[0][i]) / (seg[1][i] - seg[0][i]);
                    if (0.0..=1.0).contains(&t) {
                        exit = cum + t * len;
                    }
                }
            }
        }
        cum += len;
    }
    exit
}

fn crosses_box(a: [f64; 2], b: [f64; 2], w: f64) -> bool {
    let lo = [a[0].min(b[0]), a[1].min(b[1])];
    let hi = [a[0].max(b[0]), a[1].max(b[1])];
    lo[0] <= w && hi[0] >= -w && lo[1] <= w && hi[1] >= -w
}

/// All lane-width conflict squares shared by two intents, ordered by the
/// host's approach. Paths that merge into the same exit lane (collinear
/// overlap) are not crossing conflicts.
pub fn derive_conflicts(
    layout: &IntersectionLayout,
    host: PathIntent,
    other: PathIntent,
) -> Result<Vec<PairConflict>, GeometryError> {
    if host.arm == other.arm {
        return Err(GeometryError::SameApproach);
    }
    let hp = LanePath::build(layout, host);
    let op = LanePath::build(layout, other);
    let half = layout.lane_width / 2.0;

    let mut found: Vec<PairConflict> = Vec::new();
    let mut host_cum = 0.0;
    for hseg in hp.points.windows(2) {
        let hlen = dist(hseg[0], hseg[1]);
        let mut other_cum = 0.0;
        for oseg in op.points.windows(2) {
            let olen = dist(oseg[0], oseg[1]);
            if let Some((point, ht, ot)) = transversal_crossing(hseg[0], hseg[1], oseg[0], oseg[1]) {
                let host_s = host_cum + ht * hlen - hp.stopline_cum;
                let other_s = other_cum + ot * olen - op.stopline_cum;
                found.push(PairConflict {
                    center: point,
                    half_width: half,
                    host_entry_s: host_s - half,
                    other_entry_s: other_s - half,
                });
            }
            other_cum += olen;
        }
        host_cum += hlen;
    }
    found.sort_by(|a, b| a.host_entry_s.partial_cmp(&b.host_entry_s).unwrap());
    Ok(found)
}

/// Strict interior crossing of two axis-aligned segments; returns the point
/// and the parameter along each segment.
fn transversal_crossing(
    a0: [f64; 2],
    a1: [f64; 2],
    b0: [f64; 2],
    b1: [f64; 2],
) -> Option<([f64; 2], f64, f64)> {
    const EPS: f64 = 1e-9;
    let a_vertical = (a0[0] - a1[0]).abs() < EPS;
    let b_vertical = (b0[0] - b1[0]).abs() < EPS;
    if a_vertical == b_vertical {
        return None; // parallel or collinear: a merge, not a crossing
    }
    let (v0, v1, h0, h1, swapped) =
        if a_vertical { (a0, a1, b0, b1, false) } else { (b0, b1, a0, a1, true) };
    let x = v0[0];
    let y = h0[1];
    let (ylo, yhi) = (v0[1].min(v1[1]), v0[1].max(v1[1]));
    let (xlo, xhi) = (h0[0].min(h1[0]), h0[0].max(h1[0]));
    if x > xlo + EPS && x < xhi - EPS && y > ylo + EPS && y < yhi - EPS {
        let vt = (y - v0[1]) / (v1[1] - v0[1]);
        let ht = (x - h0[0]) / (h1[0] - h0[0]);
        let (at, bt) = if swapped { (ht, vt) } else { (vt, ht) };
        Some(([x, y], at, bt))
    } else {
        None
    }
}

/// One two-vehicle subproblem: a host, one (possibly virtual) opponent, and
/// the conflict square they share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subproblem {
    pub host: usize,
    pub opponent: usize,
    pub conflict: PairConflict,
    /// Index of this rectangle among the pair's shared rectangles; each one
    /// acts as a separate virtual opponent.
    pub rect_index: usize,
}

/// Decompose an n-vehicle problem into per-agent two-vehicle subproblems,
/// one per (opponent, shared rectangle). Pairs without crossing paths (or
/// from the same arm) produce none.
pub fn decompose(intents: &[PathIntent], layout: &IntersectionLayout) -> Vec<Vec<Subproblem>> {
    let n = intents.len();
    let mut per_agent: Vec<Vec<Subproblem>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let rects = match derive_conflicts(layout, intents[i], intents[j]) {
                Ok(r) => r,
                Err(GeometryError::SameApproach) => continue,
            };
            for (k, rect) in rects.iter().enumerate() {
                per_agent[i].push(Subproblem { host: i, opponent: j, conflict: *rect, rect_index: k });
                let mirrored = PairConflict {
                    host_entry_s: rect.other_entry_s,
                    other_entry_s: rect.host_entry_s,
                    ..*rect
                };
                per_agent[j].push(Subproblem { host: j, opponent: i, conflict: mirrored, rect_index: k });
            }
        }
    }
    per_agent
}

/// Aggregated command for one agent after all its subproblems resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Command {
    Accelerate,
    Decelerate,
    EmergencyBrake,
}

/// Intersection of per-subproblem strategies: unanimous agreement wins, any
/// disagreement falls back to deceleration, and an escalation-exhausted
/// subproblem with a currently negative residual interval forces emergency
/// braking. No subproblems means a free road.
pub fn aggregate(choices: &[Strategy], exhausted_with_conflict: bool) -> Command {
    if choices.is_empty() {
        return Command::Accelerate;
    }
    if exhausted_with_conflict {
        return Command::EmergencyBrake;
    }
    let first = choices[0];
    if choices.iter().all(|s| *s == first) {
        match first {
            Strategy::Accelerate => Command::Accelerate,
            Strategy::Decelerate => Command::Decelerate,
        }
    } else {
        Command::Decelerate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> IntersectionLayout {
        IntersectionLayout::default()
    }

    fn straight(arm: Arm) -> PathIntent {
        PathIntent { arm, maneuver: Maneuver::Straight }
    }

    fn left(arm: Arm) -> PathIntent {
        PathIntent { arm, maneuver: Maneuver::Left }
    }

    #[test]
    fn perpendicular_straights_share_one_square() {
        let l = layout();
        let rects = derive_conflicts(&l, straight(Arm::South), straight(Arm::East)).unwrap();
        assert_eq!(rects.len(), 1);
        let r = rects[0];
        assert_eq!(r.center, [1.75, 1.75]);
        // Host from the south crosses the far half of the box; the other
        // enters the square right at its box edge.
        assert!((r.host_entry_s - 3.5).abs() < 1e-9);
        assert!(r.other_entry_s.abs() < 1e-9);
    }

    #[test]
    fn opposite_straights_do_not_conflict() {
        let l = layout();
        let rects = derive_conflicts(&l, straight(Arm::South), straight(Arm::North)).unwrap();
        assert!(rects.is_empty());
    }

    #[test]
    fn opposing_left_turns_cross_twice() {
        let l = layout();
        let rects = derive_conflicts(&l, left(Arm::South), left(Arm::North)).unwrap();
        assert_eq!(rects.len(), 2);
        assert!(rects[0].host_entry_s < rects[1].host_entry_s);
    }

    #[test]
    fn same_arm_is_rejected() {
        let l = layout();
        assert_eq!(
            derive_conflicts(&l, straight(Arm::South), left(Arm::South)),
            Err(GeometryError::SameApproach)
        );
    }

    #[test]
    fn four_straights_decompose_into_adjacent_pairs() {
        let l = layout();
        let intents: Vec<_> = Arm::ALL.iter().map(|a| straight(*a)).collect();
        let subs = decompose(&intents, &l);
        for (i, agent_subs) in subs.iter().enumerate() {
            assert_eq!(agent_subs.len(), 2, "agent {i} should face exactly two subproblems");
            for sp in agent_subs {
                assert_ne!(intents[sp.host].arm, intents[sp.opponent].arm);
            }
        }
        // Symmetry: i references j exactly when j references i.
        for i in 0..4 {
            for sp in &subs[i] {
                assert!(subs[sp.opponent].iter().any(|q| q.opponent == i));
            }
        }
    }

    #[test]
    fn two_agent_decomposition_is_a_single_pair() {
        let l = layout();
        let intents = vec![straight(Arm::South), straight(Arm::East)];
        let subs = decompose(&intents, &l);
        assert_eq!(subs[0].len(), 1);
        assert_eq!(subs[1].len(), 1);
        assert_eq!(subs[0][0].opponent, 1);
        // The two views of the pair agree on geometry.
        assert_eq!(subs[0][0].conflict.host_entry_s, subs[1][0].conflict.other_entry_s);
    }

    #[test]
    fn straight_box_exit_matches_geometry() {
        let l = layout();
        let path = LanePath::build(&l, straight(Arm::South));
        // Entry edge at s = 0 (stopline), exit at the far box edge.
        assert!((path.box_exit_s - 2.0 * l.lane_width).abs() < 1e-9);
    }

    #[test]
    fn aggregate_rules() {
        use Strategy::{Accelerate as Acc, Decelerate as Dec};
        assert_eq!(aggregate(&[], false), Command::Accelerate);
        assert_eq!(aggregate(&[Acc, Acc], false), Command::Accelerate);
        assert_eq!(aggregate(&[Acc, Dec], false), Command::Decelerate);
        assert_eq!(aggregate(&[Dec, Dec], false), Command::Decelerate);
        assert_eq!(aggregate(&[Acc, Acc], true), Command::EmergencyBrake);
    }

    #[test]
    fn right_neighbor_cycle() {
        assert_eq!(Arm::South.right_neighbor(), Arm::East);
        assert_eq!(Arm::East.right_neighbor(), Arm::North);
        assert_eq!(Arm::North.right_neighbor(), Arm::West);
        assert_eq!(Arm::West.right_neighbor(), Arm::South);
    }
}
