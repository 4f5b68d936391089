//! Equilibrium quality measures: the saddle (Nash) gap and per-infoset regret.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::game::{GameTree, Node, NodeId, Player, SequenceFormProblem};
use crate::treeplex::{Perturbation, Treeplex, TreeplexPoint};

/// `max_{q in Q^xi} <g, q>` and a maximizer (ties go to the lowest index).
pub fn best_response(t: &Treeplex, g: &[f64], xi: Perturbation) -> Result<(f64, TreeplexPoint)> {
    if g.len() != t.dim() {
        return Err(Error::Argument(format!(
            "gradient has length {} but treeplex dimension is {}",
            g.len(),
            t.dim()
        )));
    }
    xi.check(t)?;
    let xi = xi.value();
    let mut acc = g.to_vec();
    let mut point = vec![0.0; t.dim()];
    let mut value = 0.0;
    for s in t.simplexes().iter().rev() {
        let local = &acc[s.range.clone()];
        let (best, best_v) =
            local
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
        let c = 1.0 - s.size() as f64 * xi;
        let v = c * best_v + xi * local.iter().sum::<f64>();
        let out = &mut point[s.range.clone()];
        out.fill(xi);
        out[best] += c;
        match s.parent {
            Some(p) => acc[p] += v,
            None => value += v,
        }
    }
    for s in t.simplexes() {
        if let Some(p) = s.parent {
            let m = point[p];
            for v in &mut point[s.range.clone()] {
                *v *= m;
            }
        }
    }
    Ok((value, TreeplexPoint(point)))
}

/// Saddle gap from the products `A [1; y]` and `A^T [1; x]` (no traversals).
pub fn saddle_gap_from_products(
    p: &SequenceFormProblem,
    ay: &[f64],
    atx: &[f64],
    xi: Perturbation,
) -> Result<f64> {
    let (best_y, _) = best_response(p.y(), &atx[1..], xi)?;
    let neg: Vec<f64> = ay[1..].iter().map(|v| -v).collect();
    let (best_x, _) = best_response(p.x(), &neg, xi)?;
    // max_y <x, A y> - min_x <x, A y>
    Ok((atx[0] + best_y) - (ay[0] - best_x))
}

/// Saddle gap of `(x, y)` against best responses restricted to `X^xi`, `Y^xi`.
/// Counts two traversals.
pub fn saddle_gap(p: &SequenceFormProblem, x: &[f64], y: &[f64], xi: Perturbation) -> Result<f64> {
    let ay = p.mul_y(y)?;
    let atx = p.mul_x(x)?;
    saddle_gap_from_products(p, &ay, &atx, xi)
}

/// Sum of both players' best-response improvements in the unperturbed game.
pub fn nash_gap(p: &SequenceFormProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    for (t, q, who) in [(p.x(), x, "x"), (p.y(), y, "y")] {
        if !t.validate_point(q, Perturbation::NONE)? {
            return Err(Error::Argument(format!(
                "{who} is not a valid sequence-form strategy"
            )));
        }
    }
    saddle_gap(p, x, y, Perturbation::NONE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfosetRegret {
    pub player: Player,
    pub infoset: usize,
    pub label: String,
    /// Opponent-and-chance reach summed over the infoset's nodes.
    pub reach_mass: f64,
    pub regret: f64,
    /// Set when every node had zero reach and uniform node weights were used.
    pub zero_reach: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretTable {
    pub entries: Vec<InfosetRegret>,
}

impl RegretTable {
    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.regret).fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> Option<&InfosetRegret> {
        self.entries
            .iter()
            .max_by(|a, b| a.regret.total_cmp(&b.regret))
    }

    /// `player,infoset,label,reach_mass,regret,zero_reach` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("player,infoset,label,reach_mass,regret,zero_reach\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{}",
                e.player.index() + 1,
                e.infoset,
                e.label,
                e.reach_mass,
                e.regret,
                e.zero_reach
            );
        }
        out
    }
}

/// Per-infoset regret evaluator with reusable scratch space.
///
/// The regret of infoset `h` assumes `h` is reached: nodes are weighted by
/// opponent-and-chance reach normalized over `h` (uniform when all are zero),
/// and compares the value of the current profile against best-responding at
/// `h` and at every own infoset below it, with everyone else held fixed.
pub struct RegretEvaluator<'g> {
    game: &'g GameTree,
    treeplexes: [Treeplex; 2],
    stamp: u32,
    rho: Vec<f64>,
    rho_stamp: Vec<u32>,
    best: Vec<f64>,
    best_stamp: Vec<u32>,
    choice: [Vec<(u32, usize)>; 2],
}

impl<'g> RegretEvaluator<'g> {
    pub fn new(game: &'g GameTree) -> Self {
        let n = game.num_nodes();
        RegretEvaluator {
            game,
            treeplexes: [game.treeplex(Player::One), game.treeplex(Player::Two)],
            stamp: 0,
            rho: vec![0.0; n],
            rho_stamp: vec![0; n],
            best: vec![0.0; n],
            best_stamp: vec![0; n],
            choice: [
                vec![(0, 0); game.infosets(Player::One).len()],
                vec![(0, 0); game.infosets(Player::Two).len()],
            ],
        }
    }

    /// Behavioral strategies of a sequence-form profile.
    pub fn behavioral(&self, x: &[f64], y: &[f64]) -> Result<[Vec<f64>; 2]> {
        for (t, q) in self.treeplexes.iter().zip([x, y]) {
            if q.len() != t.dim() {
                return Err(Error::Argument(format!(
                    "strategy has length {} but treeplex dimension is {}",
                    q.len(),
                    t.dim()
                )));
            }
        }
        Ok([
            self.treeplexes[0].sequence_to_behavioral(x),
            self.treeplexes[1].sequence_to_behavioral(y),
        ])
    }

    /// Regret table of `player` for a sequence-form profile.
    pub fn infoset_regrets(&mut self, x: &[f64], y: &[f64], player: Player) -> Result<RegretTable> {
        let b = self.behavioral(x, y)?;
        Ok(self.infoset_regrets_behavioral([&b[0], &b[1]], player))
    }

    /// Largest regret over both players' infosets.
    pub fn max_regret(&mut self, x: &[f64], y: &[f64]) -> Result<f64> {
        let b = self.behavioral(x, y)?;
        let b = [&b[0][..], &b[1][..]];
        Ok(Player::BOTH
            .iter()
            .map(|&p| self.infoset_regrets_behavioral(b, p).max())
            .fold(0.0, f64::max))
    }

    pub fn infoset_regrets_behavioral(&mut self, b: [&[f64]; 2], player: Player) -> RegretTable {
        let game = self.game;
        let values = node_values(game, b);
        let reach = opponent_reach(game, b, player);
        let sign = player.sign();
        let mut entries = Vec::with_capacity(game.infosets(player).len());
        for (id, h) in game.infosets(player).iter().enumerate() {
            let mass: f64 = h.nodes.iter().map(|&n| reach[n]).sum();
            let zero_reach = mass <= 0.0;
            let weights: Vec<f64> = if zero_reach {
                vec![1.0 / h.nodes.len() as f64; h.nodes.len()]
            } else {
                h.nodes.iter().map(|&n| reach[n] / mass).collect()
            };
            let current: f64 = h
                .nodes
                .iter()
                .zip(&weights)
                .map(|(&n, &w)| w * sign * values[n])
                .sum();
            let best = self.best_at(h.nodes.as_slice(), &weights, player, b);
            entries.push(InfosetRegret {
                player,
                infoset: id,
                label: h.label.clone(),
                reach_mass: mass,
                regret: best - current,
                zero_reach,
            });
        }
        RegretTable { entries }
    }

    /// Value of best-responding at the infoset made of `nodes` (weighted) and below.
    fn best_at(
        &mut self,
        nodes: &[NodeId],
        weights: &[f64],
        player: Player,
        b: [&[f64]; 2],
    ) -> f64 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.rho_stamp.fill(0);
            self.best_stamp.fill(0);
            for c in &mut self.choice {
                c.fill((0, 0));
            }
            self.stamp = 1;
        }
        for (&n, &w) in nodes.iter().zip(weights) {
            self.spread(n, w, player, b);
        }
        let Node::Decision { infoset, .. } = self.game.node(nodes[0]) else {
            unreachable!("infoset nodes are decision nodes")
        };
        let a = self.resolve(*infoset, player, b);
        nodes
            .iter()
            .map(|&n| match self.game.node(n) {
                Node::Decision { children, .. } => self.best_value(children[a], player, b),
                _ => unreachable!(),
            })
            .sum()
    }

    /// Pushes opponent-and-chance weight from `node` down its subtree.
    fn spread(&mut self, node: NodeId, weight: f64, player: Player, b: [&[f64]; 2]) {
        let game = self.game;
        let mut stack = vec![(node, weight)];
        while let Some((n, w)) = stack.pop() {
            self.rho[n] = w;
            self.rho_stamp[n] = self.stamp;
            if w == 0.0 {
                continue;
            }
            match game.node(n) {
                Node::Terminal { .. } => {}
                Node::Chance { outcomes } => {
                    stack.extend(outcomes.iter().map(|&(p, c)| (c, w * p)))
                }
                Node::Decision {
                    player: who,
                    infoset,
                    children,
                } => {
                    if *who == player {
                        stack.extend(children.iter().map(|&c| (c, w)));
                    } else {
                        let h = &game.infosets(*who)[*infoset];
                        let sigma = &b[who.index()][h.seq_start..];
                        stack.extend(children.iter().zip(sigma).map(|(&c, &p)| (c, w * p)));
                    }
                }
            }
        }
    }

    fn rho_of(&self, n: NodeId) -> f64 {
        if self.rho_stamp[n] == self.stamp {
            self.rho[n]
        } else {
            0.0
        }
    }

    fn best_value(&mut self, n: NodeId, player: Player, b: [&[f64]; 2]) -> f64 {
        if self.best_stamp[n] == self.stamp {
            return self.best[n];
        }
        let w = self.rho_of(n);
        let v = if w == 0.0 {
            0.0
        } else {
            match self.game.node(n) {
                Node::Terminal { payoff } => w * player.sign() * payoff,
                Node::Chance { outcomes } => outcomes
                    .iter()
                    .map(|&(_, c)| self.best_value(c, player, b))
                    .sum(),
                Node::Decision {
                    player: who,
                    infoset,
                    children,
                } => {
                    if *who == player {
                        let a = self.resolve(*infoset, player, b);
                        self.best_value(children[a], player, b)
                    } else {
                        children
                            .iter()
                            .map(|&c| self.best_value(c, player, b))
                            .sum()
                    }
                }
            }
        };
        self.best[n] = v;
        self.best_stamp[n] = self.stamp;
        v
    }

    /// Best action at own infoset `h` given the weights spread so far.
    fn resolve(&mut self, h: usize, player: Player, b: [&[f64]; 2]) -> usize {
        let pi = player.index();
        if self.choice[pi][h].0 == self.stamp {
            return self.choice[pi][h].1;
        }
        let game = self.game;
        let info = &game.infosets(player)[h];
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..info.num_actions() {
            let v: f64 = info
                .nodes
                .iter()
                .map(|&n| match game.node(n) {
                    Node::Decision { children, .. } => self.best_value(children[a], player, b),
                    _ => unreachable!(),
                })
                .sum();
            if v > best.1 {
                best = (a, v);
            }
        }
        self.choice[pi][h] = (self.stamp, best.0);
        best.0
    }
}

/// Expected payoff to player one at every node under `b`.
pub fn node_values(game: &GameTree, b: [&[f64]; 2]) -> Vec<f64> {
    let mut values = vec![0.0; game.num_nodes()];
    for &n in game.preorder().iter().rev() {
        values[n] = match game.node(n) {
            Node::Terminal { payoff } => *payoff,
            Node::Chance { outcomes } => outcomes.iter().map(|&(p, c)| p * values[c]).sum(),
            Node::Decision {
                player,
                infoset,
                children,
            } => {
                let h = &game.infosets(*player)[*infoset];
                let sigma = &b[player.index()][h.seq_start..];
                children
                    .iter()
                    .zip(sigma)
                    .map(|(&c, &p)| p * values[c])
                    .sum()
            }
        };
    }
    values
}

/// Product of chance and opponent action probabilities from the root to every node.
pub fn opponent_reach(game: &GameTree, b: [&[f64]; 2], player: Player) -> Vec<f64> {
    let mut reach = vec![0.0; game.num_nodes()];
    let mut stack = vec![(game.root(), 1.0)];
    while let Some((n, w)) = stack.pop() {
        reach[n] = w;
        match game.node(n) {
            Node::Terminal { .. } => {}
            Node::Chance { outcomes } => stack.extend(outcomes.iter().map(|&(p, c)| (c, w * p))),
            Node::Decision {
                player: who,
                infoset,
                children,
            } => {
                if *who == player {
                    stack.extend(children.iter().map(|&c| (c, w)));
                } else {
                    let h = &game.infosets(*who)[*infoset];
                    let sigma = &b[who.index()][h.seq_start..];
                    stack.extend(children.iter().zip(sigma).map(|(&c, &p)| (c, w * p)));
                }
            }
        }
    }
    reach
}

/// Largest per-infoset regret of `player` and the full table, for a sequence-form profile.
pub fn infoset_max_regret(
    game: &GameTree,
    x: &[f64],
    y: &[f64],
    player: Player,
) -> Result<(f64, RegretTable)> {
    let table = RegretEvaluator::new(game).infoset_regrets(x, y, player)?;
    Ok((table.max(), table))
}
