use super::{GameTree, GameTreeBuilder, NodeId, Player};
use crate::error::Result;

const CARDS: [&str; 3] = ["J", "Q", "K"];

/// Three-card Kuhn poker: ante 1, one card each, a single bet of size 1.
pub fn build_kuhn() -> GameTree {
    try_build().expect("kuhn tree is well formed")
}

fn try_build() -> Result<GameTree> {
    let mut b = GameTreeBuilder::new();
    let mut deals = Vec::new();
    for c1 in 0..3 {
        for c2 in 0..3 {
            if c1 != c2 {
                deals.push((1.0 / 6.0, deal(&mut b, c1, c2)?));
            }
        }
    }
    let root = b.chance(deals);
    b.finish("kuhn", root)
}

fn deal(b: &mut GameTreeBuilder, c1: usize, c2: usize) -> Result<NodeId> {
    // showdown payoff to player one when `pot` chips each are in
    let show = |pot: f64| if c1 > c2 { pot } else { -pot };
    let (h1, h2) = (CARDS[c1], CARDS[c2]);

    // check, then player two checks or bets
    let kk = b.terminal(show(1.0));
    let kbf = b.terminal(-1.0);
    let kbc = b.terminal(show(2.0));
    let kb = b.decision(
        Player::One,
        &format!("{h1}:kb"),
        vec![("f", kbf), ("c", kbc)],
    )?;
    let k = b.decision(Player::Two, &format!("{h2}:k"), vec![("k", kk), ("b", kb)])?;

    // bet, then player two folds or calls
    let bf = b.terminal(1.0);
    let bc = b.terminal(show(2.0));
    let bet = b.decision(Player::Two, &format!("{h2}:b"), vec![("f", bf), ("c", bc)])?;

    b.decision(Player::One, &format!("{h1}:"), vec![("k", k), ("b", bet)])
}
