use super::{GameTree, GameTreeBuilder, NodeId, Player};
use crate::error::{Error, Result};

/// Bet size in each of the two betting rounds.
const BET_SIZES: [f64; 2] = [2.0, 4.0];
/// Bets allowed per round, counting the opening bet (bet then one raise).
const MAX_BETS: usize = 2;

/// Leduc hold'em with `ranks` ranks and two suits of each.
///
/// Each player antes 1 and is dealt one private card. A fixed-limit betting
/// round (bet 2) is followed by one community card and a second round (bet 4).
/// Player one opens both rounds. At showdown a private card pairing the board
/// wins, otherwise the higher private card wins, and equal ranks split.
pub fn build_leduc(ranks: usize) -> Result<GameTree> {
    if ranks < 2 {
        return Err(Error::Argument(format!(
            "leduc needs at least 2 ranks, got {ranks}"
        )));
    }
    let deck = 2 * ranks;
    let mut b = GameTreeBuilder::new();
    let mut first = Vec::with_capacity(deck);
    for c1 in 0..deck {
        let mut second = Vec::with_capacity(deck - 1);
        for c2 in (0..deck).filter(|&c| c != c1) {
            let state = Betting {
                cards: [c1, c2],
                board: None,
                round: 0,
                history: [String::new(), String::new()],
                contrib: [1.0, 1.0],
                bets: 0,
                actor: Player::One,
                facing: false,
            };
            second.push((1.0 / (deck - 1) as f64, state.build(&mut b, deck)?));
        }
        let node = b.chance(second);
        first.push((1.0 / deck as f64, node));
    }
    let root = b.chance(first);
    b.finish(&format!("leduc{ranks}"), root)
}

#[derive(Clone)]
struct Betting {
    cards: [usize; 2],
    board: Option<usize>,
    round: usize,
    history: [String; 2],
    contrib: [f64; 2],
    bets: usize,
    actor: Player,
    facing: bool,
}

fn rank(card: usize) -> usize {
    card / 2
}

impl Betting {
    fn label(&self) -> String {
        let own = rank(self.cards[self.actor.index()]) + 1;
        let board = self
            .board
            .map_or(String::new(), |c| (rank(c) + 1).to_string());
        format!("{own}{board}:{}/{}", self.history[0], self.history[1])
    }

    fn after(&self, action: char) -> Betting {
        let mut next = self.clone();
        next.history[self.round].push(action);
        next.actor = self.actor.opponent();
        next
    }

    fn build(&self, b: &mut GameTreeBuilder, deck: usize) -> Result<NodeId> {
        let me = self.actor.index();
        let other = self.actor.opponent().index();
        let size = BET_SIZES[self.round];
        let mut actions: Vec<(String, NodeId)> = Vec::new();
        if self.facing {
            let fold = match self.actor {
                Player::One => -self.contrib[0],
                Player::Two => self.contrib[1],
            };
            actions.push(("f".into(), b.terminal(fold)));

            let mut call = self.after('c');
            call.contrib[me] = self.contrib[other];
            actions.push(("c".into(), call.close_round(b, deck)?));

            if self.bets < MAX_BETS {
                let mut raise = self.after('r');
                raise.contrib[me] = self.contrib[other] + size;
                raise.bets += 1;
                raise.facing = true;
                actions.push(("r".into(), raise.build(b, deck)?));
            }
        } else {
            let check = self.after('k');
            // player one opens every round, so a check by player two closes it
            let node = if self.actor == Player::Two {
                check.close_round(b, deck)?
            } else {
                check.build(b, deck)?
            };
            actions.push(("k".into(), node));

            let mut bet = self.after('b');
            bet.contrib[me] += size;
            bet.bets = 1;
            bet.facing = true;
            actions.push(("b".into(), bet.build(b, deck)?));
        }
        b.decision(self.actor, &self.label(), actions)
    }

    fn close_round(&self, b: &mut GameTreeBuilder, deck: usize) -> Result<NodeId> {
        if self.round == 0 {
            let remaining: Vec<usize> = (0..deck).filter(|c| !self.cards.contains(c)).collect();
            let p = 1.0 / remaining.len() as f64;
            let mut outcomes = Vec::with_capacity(remaining.len());
            for card in remaining {
                let next = Betting {
                    cards: self.cards,
                    board: Some(card),
                    round: 1,
                    history: self.history.clone(),
                    contrib: self.contrib,
                    bets: 0,
                    actor: Player::One,
                    facing: false,
                };
                outcomes.push((p, next.build(b, deck)?));
            }
            Ok(b.chance(outcomes))
        } else {
            Ok(b.terminal(self.showdown()))
        }
    }

    fn showdown(&self) -> f64 {
        let board = rank(self.board.expect("showdown happens after the board card"));
        let (r1, r2) = (rank(self.cards[0]), rank(self.cards[1]));
        let pot = self.contrib[0];
        debug_assert_eq!(self.contrib[0], self.contrib[1]);
        if r1 == board {
            pot
        } else if r2 == board {
            -pot
        } else if r1 > r2 {
            pot
        } else if r2 > r1 {
            -pot
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Node;

    #[test]
    fn rejects_tiny_deck() {
        assert!(matches!(build_leduc(1), Err(Error::Argument(_))));
    }

    #[test]
    fn standard_leduc_infoset_counts() {
        let g = build_leduc(3).unwrap();
        // 3 ranks x 3 opening histories, plus 3 x 3 boards x 5 continuing
        // first-round histories x 3 second-round histories
        assert_eq!(g.infosets(Player::One).len(), 144);
        assert_eq!(g.infosets(Player::Two).len(), 144);
    }

    #[test]
    fn deck_size_and_uniform_deals() {
        let g = build_leduc(5).unwrap();
        match g.node(g.root()) {
            Node::Chance { outcomes } => {
                assert_eq!(outcomes.len(), 10);
                assert!(outcomes.iter().all(|o| o.0 == 0.1));
            }
            _ => panic!("root must deal"),
        }
        for n in 0..g.num_nodes() {
            if let Node::Chance { outcomes } = g.node(n) {
                let p = outcomes[0].0;
                assert!(outcomes.iter().all(|o| o.0 == p));
                assert!(matches!(outcomes.len(), 8..=10));
            }
        }
    }

    #[test]
    fn largest_pot_is_thirteen() {
        let g = build_leduc(3).unwrap();
        let max = (0..g.num_nodes())
            .filter_map(|n| match g.node(n) {
                Node::Terminal { payoff } => Some(payoff.abs()),
                _ => None,
            })
            .fold(0.0, f64::max);
        assert_eq!(max, 13.0);
    }
}
