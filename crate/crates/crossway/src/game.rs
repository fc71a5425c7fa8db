//! Pure-strategy Nash solving for the 2x2 accelerate/decelerate subgame, and
//! the resolution rules for unique, missing, and multiple equilibria.

use serde::{Deserialize, Serialize};

/// Top-level strategy of one vehicle in a subgame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Accelerate,
    Decelerate,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Accelerate, Strategy::Decelerate];

    fn index(self) -> usize {
        match self {
            Strategy::Accelerate => 0,
            Strategy::Decelerate => 1,
        }
    }
}

/// One cell of the joint strategy space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyPair {
    pub host: Strategy,
    pub other: Strategy,
}

impl StrategyPair {
    pub const fn new(host: Strategy, other: Strategy) -> Self {
        Self { host, other }
    }

    /// Enumeration order: (Acc,Acc), (Acc,Dec), (Dec,Acc), (Dec,Dec).
    pub const ALL: [StrategyPair; 4] = [
        StrategyPair::new(Strategy::Accelerate, Strategy::Accelerate),
        StrategyPair::new(Strategy::Accelerate, Strategy::Decelerate),
        StrategyPair::new(Strategy::Decelerate, Strategy::Accelerate),
        StrategyPair::new(Strategy::Decelerate, Strategy::Decelerate),
    ];

    fn dec_count(self) -> usize {
        usize::from(self.host == Strategy::Decelerate) + usize::from(self.other == Strategy::Decelerate)
    }
}

/// Discounted payoffs for every strategy pair; `[host strategy][other
/// strategy] -> (host payoff, other payoff)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffMatrix {
    pub cells: [[(f64, f64); 2]; 2],
}

impl PayoffMatrix {
    pub fn get(&self, pair: StrategyPair) -> (f64, f64) {
        self.cells[pair.host.index()][pair.other.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.cells.iter().flatten().all(|(h, o)| h.is_finite() && o.is_finite())
    }
}

/// Which of the resolution cases applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseId {
    /// Exactly one equilibrium.
    Unique,
    /// No equilibrium at first; safety weightings were escalated.
    Escalated,
    /// Two or more equilibria.
    Multiple,
}

/// Outcome of resolving one subgame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResolution {
    pub chosen: StrategyPair,
    pub case_id: CaseId,
    pub escalation_steps: u32,
    pub equilibria: Vec<StrategyPair>,
    /// The matrix the decision was actually taken from (post-escalation).
    pub matrix: PayoffMatrix,
}

/// All pure-strategy Nash equilibria under weak best-response inequalities.
pub fn pure_nash(matrix: &PayoffMatrix) -> Vec<StrategyPair> {
    StrategyPair::ALL
        .into_iter()
        .filter(|pair| {
            let (u_host, u_other) = matrix.get(*pair);
            let host_dev = matrix.get(StrategyPair::new(flip(pair.host), pair.other)).0;
            let other_dev = matrix.get(StrategyPair::new(pair.host, flip(pair.other))).1;
            u_host >= host_dev && u_other >= other_dev
        })
        .collect()
}

fn flip(s: Strategy) -> Strategy {
    match s {
        Strategy::Accelerate => Strategy::Decelerate,
        Strategy::Decelerate => Strategy::Accelerate,
    }
}

pub const ESCALATION_STEP: f64 = 0.1;
pub const MAX_ESCALATIONS: u32 = 5;

/// Resolve a subgame. `rebuild(boost)` must return the payoff matrix with
/// both drivers' safety weightings raised by `boost`.
///
/// One equilibrium: take it. None: raise both safety weightings by
/// [`ESCALATION_STEP`] and retry, falling back to (Dec, Dec) after
/// [`MAX_ESCALATIONS`]. Two or more: keep the previous subgame's pair if it
/// is among them, otherwise take the pair with the largest summed payoff
/// (exact ties resolved toward deceleration).
pub fn resolve(
    mut rebuild: impl FnMut(f64) -> PayoffMatrix,
    last: Option<StrategyPair>,
) -> GameResolution {
    let mut escalations = 0u32;
    let mut matrix = rebuild(0.0);
    let mut equilibria = pure_nash(&matrix);

    while equilibria.is_empty() && escalations < MAX_ESCALATIONS {
        escalations += 1;
        matrix = rebuild(f64::from(escalations) * ESCALATION_STEP);
        equilibria = pure_nash(&matrix);
    }

    let both_dec = StrategyPair::new(Strategy::Decelerate, Strategy::Decelerate);
    let (chosen, case_id) = if equilibria.is_empty() {
        (both_dec, CaseId::Escalated)
    } else if escalations > 0 {
        (select_multiple(&matrix, &equilibria, last), CaseId::Escalated)
    } else if equilibria.len() == 1 {
        (equilibria[0], CaseId::Unique)
    } else {
        (select_multiple(&matrix, &equilibria, last), CaseId::Multiple)
    };

    GameResolution { chosen, case_id, escalation_steps: escalations, equilibria, matrix }
}

fn select_multiple(
    matrix: &PayoffMatrix,
    equilibria: &[StrategyPair],
    last: Option<StrategyPair>,
) -> StrategyPair {
    if let Some(prev) = last {
        if equilibria.contains(&prev) {
            return prev;
        }
    }
    let mut best = equilibria[0];
    let mut best_key = selection_key(matrix, best);
    for &pair in &equilibria[1..] {
        let key = selection_key(matrix, pair);
        if key > best_key {
            best = pair;
            best_key = key;
        }
    }
    best
}

/// Largest total payoff wins; exact ties prefer more deceleration, then the
/// host yielding.
fn selection_key(matrix: &PayoffMatrix, pair: StrategyPair) -> (f64, usize, usize) {
    let (u_host, u_other) = matrix.get(pair);
    (u_host + u_other, pair.dec_count(), pair.host.index())
}

/// Feedback update of the opponent's estimated safety weighting from the gap
/// between its observed and predicted accelerations.
pub fn update_style(sigma_est: f64, a_observed: f64, a_equilibrium: f64, k_sigma: f64) -> f64 {
    (sigma_est - k_sigma * (a_observed - a_equilibrium)).clamp(0.05, 0.95)
}
