use super::{GameTree, GameTreeBuilder, Player};

/// A one-shot matrix game: player one picks a row, player two a column without
/// observing it. `payoffs[r][c]` is the payoff to player one.
pub fn matrix_game(name: &str, payoffs: &[Vec<f64>]) -> GameTree {
    let mut b = GameTreeBuilder::new();
    let rows = payoffs
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let cols = row
                .iter()
                .enumerate()
                .map(|(c, &v)| (format!("c{c}"), b.terminal(v)))
                .collect();
            let node = b
                .decision(Player::Two, "cols", cols)
                .expect("rows share columns");
            (format!("r{r}"), node)
        })
        .collect();
    let root = b
        .decision(Player::One, "rows", rows)
        .expect("single root infoset");
    b.finish(name, root).expect("matrix game is well formed")
}

/// Matching pennies with payoff +1 to player one on a match.
pub fn matching_pennies() -> GameTree {
    matrix_game("matching_pennies", &[vec![1.0, -1.0], vec![-1.0, 1.0]])
}

/// The zero-sum game where Nash equilibrium prescribes irrational play:
/// player one's `x` ends the game with payoff 1; after `y`, player two picks
/// `x` (payoff -5 to player one) or `y` (payoff 0).
pub fn figure1_game() -> GameTree {
    let mut b = GameTreeBuilder::new();
    let left = b.terminal(1.0);
    let yx = b.terminal(-5.0);
    let yy = b.terminal(0.0);
    let p2 = b
        .decision(Player::Two, "after_y", vec![("x", yx), ("y", yy)])
        .expect("fresh infoset");
    let root = b
        .decision(Player::One, "root", vec![("x", left), ("y", p2)])
        .expect("fresh infoset");
    b.finish("figure1", root)
        .expect("figure-1 game is well formed")
}
