//! Two-player zero-sum extensive-form games and their sequence form.

mod kuhn;
mod leduc;
mod sequence;
mod small;

use std::collections::HashMap;

pub use kuhn::build_kuhn;
pub use leduc::build_leduc;
pub use sequence::{augment, SequenceFormProblem, SparseMatrix};
pub use small::{figure1_game, matching_pennies, matrix_game};

use crate::error::{Error, Result};
use crate::treeplex::{SimplexSpec, Treeplex};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// Sign converting a payoff to player one into a payoff to `self`.
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Payoff to player one; player two receives the negation.
    Terminal {
        payoff: f64,
    },
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Decision {
        player: Player,
        infoset: usize,
        children: Vec<NodeId>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infoset {
    pub label: String,
    pub player: Player,
    pub actions: Vec<String>,
    pub nodes: Vec<NodeId>,
    /// The player's own previous `(infoset, action)` on every path into this infoset.
    pub parent: Option<(usize, usize)>,
    /// Index of this infoset's first sequence in the player's sequence vector.
    pub seq_start: usize,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn sequence(&self, action: usize) -> usize {
        self.seq_start + action
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    name: String,
    nodes: Vec<Node>,
    root: NodeId,
    infosets: [Vec<Infoset>; 2],
}

impl GameTree {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn infosets(&self, player: Player) -> &[Infoset] {
        &self.infosets[player.index()]
    }

    pub fn num_sequences(&self, player: Player) -> usize {
        self.infosets(player).iter().map(Infoset::num_actions).sum()
    }

    pub fn num_terminals(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Terminal { .. }))
            .count()
    }

    /// The player's strategy polytope: one simplex per infoset, in infoset order.
    pub fn treeplex(&self, player: Player) -> Treeplex {
        let specs: Vec<SimplexSpec> = self
            .infosets(player)
            .iter()
            .map(|h| match h.parent {
                None => SimplexSpec::root(h.num_actions()),
                Some((p, a)) => SimplexSpec::child(h.num_actions(), p, a),
            })
            .collect();
        // Infosets are numbered in first-visit preorder, which is topological,
        // so the layout matches `seq_start`.
        Treeplex::build(&specs).expect("game infosets always form a treeplex")
    }

    /// Expected payoff to player one under behavioral strategies laid out by sequence index.
    pub fn expected_payoff(&self, behavioral: [&[f64]; 2]) -> f64 {
        self.node_value(self.root, behavioral)
    }

    /// Expected payoff to player one from `node` onward.
    pub fn node_value(&self, node: NodeId, behavioral: [&[f64]; 2]) -> f64 {
        match &self.nodes[node] {
            Node::Terminal { payoff } => *payoff,
            Node::Chance { outcomes } => outcomes
                .iter()
                .map(|&(p, c)| p * self.node_value(c, behavioral))
                .sum(),
            Node::Decision {
                player,
                infoset,
                children,
            } => {
                let h = &self.infosets[player.index()][*infoset];
                let sigma = &behavioral[player.index()][h.seq_start..h.seq_start + children.len()];
                children
                    .iter()
                    .zip(sigma)
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(&c, &p)| p * self.node_value(c, behavioral))
                    .sum()
            }
        }
    }

    /// Nodes in depth-first preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            match &self.nodes[n] {
                Node::Terminal { .. } => {}
                Node::Chance { outcomes } => stack.extend(outcomes.iter().rev().map(|o| o.1)),
                Node::Decision { children, .. } => stack.extend(children.iter().rev()),
            }
        }
        out
    }

    /// Node, infoset and sequence counts, one `key value` pair per line.
    pub fn counts_text(&self) -> String {
        let chance = self
            .nodes
            .iter()
            .filter(|n| matches!(n, Node::Chance { .. }))
            .count();
        format!(
            "game {}\nnodes {}\nterminals {}\nchance_nodes {}\ninfosets_p1 {}\ninfosets_p2 {}\nsequences_p1 {}\nsequences_p2 {}\n",
            self.name,
            self.num_nodes(),
            self.num_terminals(),
            chance,
            self.infosets(Player::One).len(),
            self.infosets(Player::Two).len(),
            self.num_sequences(Player::One),
            self.num_sequences(Player::Two),
        )
    }
}

/// Builds a game tree bottom-up; infosets are keyed by `(player, label)`.
#[derive(Debug, Default)]
pub struct GameTreeBuilder {
    nodes: Vec<Node>,
    keys: HashMap<(Player, String), usize>,
    labels: Vec<(Player, String, Vec<String>)>,
}

impl GameTreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terminal(&mut self, payoff: f64) -> NodeId {
        self.nodes.push(Node::Terminal { payoff });
        self.nodes.len() - 1
    }

    pub fn chance(&mut self, outcomes: Vec<(f64, NodeId)>) -> NodeId {
        self.nodes.push(Node::Chance { outcomes });
        self.nodes.len() - 1
    }

    /// Adds a decision node. Every node sharing `label` must offer the same actions.
    pub fn decision<S: Into<String>>(
        &mut self,
        player: Player,
        label: &str,
        actions: Vec<(S, NodeId)>,
    ) -> Result<NodeId> {
        let (names, children): (Vec<String>, Vec<NodeId>) =
            actions.into_iter().map(|(a, c)| (a.into(), c)).unzip();
        let key = (player, label.to_string());
        let id = match self.keys.get(&key) {
            Some(&id) => {
                if self.labels[id].2 != names {
                    return Err(Error::Structure(format!(
                        "infoset {label:?} has inconsistent actions {:?} vs {names:?}",
                        self.labels[id].2
                    )));
                }
                id
            }
            None => {
                let id = self.labels.len();
                self.labels.push((player, label.to_string(), names));
                self.keys.insert(key, id);
                id
            }
        };
        self.nodes.push(Node::Decision {
            player,
            infoset: id,
            children,
        });
        Ok(self.nodes.len() - 1)
    }

    /// Validates the tree below `root` and numbers infosets in first-visit preorder.
    pub fn finish(self, name: &str, root: NodeId) -> Result<GameTree> {
        let GameTreeBuilder { nodes, labels, .. } = self;
        let mut renumber: Vec<Option<usize>> = vec![None; labels.len()];
        let mut infosets: [Vec<Infoset>; 2] = [Vec::new(), Vec::new()];
        let mut nodes = nodes;

        // (node, own last sequence for each player)
        type Seq = Option<(usize, usize)>;
        let mut stack: Vec<(NodeId, [Seq; 2])> = vec![(root, [None, None])];
        let mut visited = vec![false; nodes.len()];
        while let Some((n, seqs)) = stack.pop() {
            if std::mem::replace(&mut visited[n], true) {
                return Err(Error::Structure(format!("node {n} is reachable twice")));
            }
            match &mut nodes[n] {
                Node::Terminal { payoff } => {
                    if !payoff.is_finite() {
                        return Err(Error::Structure(format!(
                            "terminal {n} has payoff {payoff}"
                        )));
                    }
                }
                Node::Chance { outcomes } => {
                    if outcomes.is_empty() {
                        return Err(Error::Structure(format!("chance node {n} has no outcomes")));
                    }
                    let total: f64 = outcomes.iter().map(|o| o.0).sum();
                    if (total - 1.0).abs() > 1e-12 || outcomes.iter().any(|o| o.0 < 0.0) {
                        return Err(Error::Structure(format!(
                            "chance node {n} probabilities sum to {total}"
                        )));
                    }
                    for &(_, c) in outcomes.iter().rev() {
                        stack.push((c, seqs));
                    }
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let (p, label, actions) = &labels[*infoset];
                    if children.is_empty() {
                        return Err(Error::Structure(format!(
                            "infoset {label:?} has no actions"
                        )));
                    }
                    let pi = p.index();
                    let id = match renumber[*infoset] {
                        Some(id) => {
                            let h: &mut Infoset = &mut infosets[pi][id];
                            if h.parent != seqs[pi] {
                                return Err(Error::Structure(format!(
                                    "perfect recall violated at infoset {label:?}: \
                                     reached after {:?} and after {:?}",
                                    h.parent, seqs[pi]
                                )));
                            }
                            h.nodes.push(n);
                            id
                        }
                        None => {
                            let id = infosets[pi].len();
                            let seq_start = infosets[pi].iter().map(Infoset::num_actions).sum();
                            infosets[pi].push(Infoset {
                                label: label.clone(),
                                player: *p,
                                actions: actions.clone(),
                                nodes: vec![n],
                                parent: seqs[pi],
                                seq_start,
                            });
                            renumber[*infoset] = Some(id);
                            id
                        }
                    };
                    debug_assert_eq!(*player, *p);
                    *infoset = id;
                    for (a, &c) in children.iter().enumerate().rev() {
                        let mut next = seqs;
                        next[pi] = Some((id, a));
                        stack.push((c, next));
                    }
                }
            }
        }
        if let Some(n) = visited.iter().position(|v| !v) {
            return Err(Error::Structure(format!(
                "node {n} is unreachable from the root"
            )));
        }

        Ok(GameTree {
            name: name.to_string(),
            nodes,
            root,
            infosets,
        })
    }
}

/// Builds a registered game by name: `kuhn`, `leduc3`, `leduc5` (or `leducN`),
/// `matching_pennies`, `figure1`.
pub fn game_by_name(name: &str) -> Result<GameTree> {
    match name {
        "kuhn" => Ok(build_kuhn()),
        "matching_pennies" => Ok(matching_pennies()),
        "figure1" => Ok(figure1_game()),
        _ => {
            if let Some(ranks) = name.strip_prefix("leduc") {
                let ranks: usize = ranks
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown game {name:?}")))?;
                return build_leduc(ranks).map_err(|e| Error::Config(e.to_string()));
            }
            Err(Error::Config(format!("unknown game {name:?}")))
        }
    }
}

/// Game names the benchmark registry exposes.
pub const REGISTERED_GAMES: &[&str] = &["kuhn", "leduc3", "leduc5", "matching_pennies", "figure1"];
