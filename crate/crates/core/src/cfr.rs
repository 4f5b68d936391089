//! CFR+ with alternating updates and linearly weighted averaging.
//!
//! Counterfactual values come from the sequence-form payoff matrix: one
//! product with the opponent's realization plan, then one bottom-up pass over
//! the updating player's treeplex. Each pass counts as one traversal.

use crate::error::Result;
use crate::game::{augment, GameTree, Player, SequenceFormProblem};
use crate::metrics::{saddle_gap_from_products, RegretEvaluator};
use crate::trace::{Budget, Cadence, Schedule, SolverTrace, TraceRow};
use crate::treeplex::{Perturbation, Treeplex, TreeplexPoint};

/// Regrets and average-strategy numerators, indexed by sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrState {
    regrets: [Vec<f64>; 2],
    numerators: [Vec<f64>; 2],
    /// Completed iterations.
    pub t: usize,
}

impl CfrState {
    pub fn new(p: &SequenceFormProblem) -> CfrState {
        let zeros = |pl| vec![0.0; p.treeplex(pl).dim()];
        CfrState {
            regrets: [zeros(Player::One), zeros(Player::Two)],
            numerators: [zeros(Player::One), zeros(Player::Two)],
            t: 0,
        }
    }

    pub fn regrets(&self, player: Player) -> &[f64] {
        &self.regrets[player.index()]
    }

    pub fn numerators(&self, player: Player) -> &[f64] {
        &self.numerators[player.index()]
    }

    /// Regret-matching+ strategy, behavioral and indexed by sequence.
    pub fn current_strategy(&self, t: &Treeplex, player: Player) -> Vec<f64> {
        normalize_per_simplex(t, &self.regrets[player.index()])
    }

    /// Weighted average strategy of `player`, behavioral and indexed by sequence.
    pub fn average_strategy(&self, t: &Treeplex, player: Player) -> Vec<f64> {
        normalize_per_simplex(t, &self.numerators[player.index()])
    }
}

/// Normalizes nonnegative weights on each simplex; all-zero simplexes become uniform.
fn normalize_per_simplex(t: &Treeplex, weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; weights.len()];
    for s in t.simplexes() {
        let total: f64 = weights[s.range.clone()].iter().map(|w| w.max(0.0)).sum();
        for i in s.range.clone() {
            out[i] = if total > 0.0 {
                weights[i].max(0.0) / total
            } else {
                1.0 / s.size() as f64
            };
        }
    }
    out
}

/// One alternating-update iteration: a pass updating player one, then one
/// updating player two against player one's new strategy.
pub fn cfr_plus_iterate(p: &SequenceFormProblem, s: &mut CfrState) -> Result<()> {
    let t = s.t + 1;
    for player in Player::BOTH {
        let own = p.treeplex(player);
        let other = p.treeplex(player.opponent());
        let opp = other.behavioral_to_sequence(&s.current_strategy(other, player.opponent()));
        // A holds payoffs to player two, so player one's values are negated
        let values = match player {
            Player::One => p.mul_y(&opp)?.iter().skip(1).map(|v| -v).collect(),
            Player::Two => p.mul_x(&opp)?[1..].to_vec(),
        };
        let sigma = s.current_strategy(own, player);
        update(own, &sigma, values, &mut s.regrets[player.index()]);
        let reach = own.behavioral_to_sequence(&sigma);
        for (n, r) in s.numerators[player.index()].iter_mut().zip(reach.iter()) {
            *n += t as f64 * r;
        }
    }
    s.t = t;
    Ok(())
}

/// Adds counterfactual regrets to `regrets` and clips at zero. `cf` starts as the
/// immediate value of each sequence and accumulates the subtrees below it.
fn update(t: &Treeplex, sigma: &[f64], mut cf: Vec<f64>, regrets: &mut [f64]) {
    for s in t.simplexes().iter().rev() {
        let value: f64 = s.range.clone().map(|i| sigma[i] * cf[i]).sum();
        for i in s.range.clone() {
            regrets[i] = (regrets[i] + cf[i] - value).max(0.0);
        }
        if let Some(parent) = s.parent {
            cf[parent] += value;
        }
    }
}

/// Sequence-form profile of the weighted average strategies.
pub fn average_profile(p: &SequenceFormProblem, s: &CfrState) -> (TreeplexPoint, TreeplexPoint) {
    let seq = |pl: Player| {
        let t = p.treeplex(pl);
        t.behavioral_to_sequence(&s.average_strategy(t, pl))
    };
    (seq(Player::One), seq(Player::Two))
}

/// Runs CFR+ until `budget` is spent; two traversals per iteration.
///
/// Trace rows measure the average profile. Both gap columns hold the
/// unperturbed gap, and computing them does not count toward the budget.
pub fn cfr_run(
    game: &GameTree,
    budget: Budget,
    cadence: Cadence,
    with_regret: bool,
) -> Result<(CfrState, SolverTrace)> {
    let problem = SequenceFormProblem::from_game(game);
    let mut regret = with_regret.then(|| RegretEvaluator::new(game));
    let mut state = CfrState::new(&problem);
    let mut schedule = Schedule::new(cadence);
    let mut trace = SolverTrace::default();
    let traversals = |s: &CfrState| 2 * s.t as u64;
    let mut record = |s: &CfrState, trace: &mut SolverTrace| -> Result<()> {
        let (x, y) = average_profile(&problem, s);
        let ay = problem.matrix().mul(&augment(&y))?;
        let atx = problem.matrix().mul_transpose(&augment(&x))?;
        let gap = saddle_gap_from_products(&problem, &ay, &atx, Perturbation::NONE)?;
        let max_infoset_regret = match regret.as_mut() {
            Some(r) => Some(r.max_regret(&x, &y)?),
            None => None,
        };
        trace.rows.push(TraceRow {
            iteration: s.t,
            traversals: traversals(s),
            nash_gap: gap,
            max_infoset_regret,
            saddle_gap_perturbed: gap,
            mu1: None,
            mu2: None,
        });
        Ok(())
    };
    while !budget.exhausted(state.t, traversals(&state)) {
        cfr_plus_iterate(&problem, &mut state)?;
        if schedule.due(traversals(&state)) {
            record(&state, &mut trace)?;
        }
    }
    if trace.last().map(|r| r.iteration) != Some(state.t) {
        record(&state, &mut trace)?;
    }
    Ok((state, trace))
}
