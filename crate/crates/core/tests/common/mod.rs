//! Brute-force reference implementations used by the integration tests.
#![allow(dead_code)]

use perturbed_egt::game::{GameTree, Node, NodeId, Player};
use perturbed_egt::smoothing::DgfWeights;
use perturbed_egt::treeplex::{SimplexSpec, Treeplex};
use rand::Rng;

/// Every vertex of `t` (one action chosen at every simplex), in sequence form.
pub fn treeplex_vertices(t: &Treeplex) -> Vec<Vec<f64>> {
    let sizes: Vec<usize> = t.simplexes().iter().map(|s| s.size()).collect();
    let mut out = Vec::new();
    for choice in product(&sizes) {
        let mut b = vec![0.0; t.dim()];
        for (s, &a) in t.simplexes().iter().zip(&choice) {
            b[s.range.start + a] = 1.0;
        }
        out.push(t.behavioral_to_sequence(&b).into_inner());
    }
    out
}

/// All index tuples `(c_0, .., c_k)` with `c_i < sizes[i]`.
pub fn product(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |a| {
                    let mut v = prefix.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

/// Largest total mass over simplexes with at most `r` branchings, over all vertices.
pub fn brute_max_l1_cutoff(t: &Treeplex, r: usize) -> f64 {
    treeplex_vertices(t)
        .iter()
        .map(|q| {
            t.simplexes()
                .iter()
                .filter(|s| s.branchings <= r)
                .map(|s| q[s.range.clone()].iter().sum::<f64>())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// A random treeplex with at most `max_seq` sequences.
pub fn random_treeplex<R: Rng>(rng: &mut R, max_seq: usize) -> Treeplex {
    let mut specs = vec![SimplexSpec::root(rng.gen_range(1..=3.min(max_seq)))];
    let mut total = specs[0].size;
    let mut sizes = vec![specs[0].size];
    loop {
        let size = rng.gen_range(1..=3);
        if total + size > max_seq || rng.gen_bool(0.2) {
            break;
        }
        if rng.gen_bool(0.2) {
            specs.push(SimplexSpec::root(size));
        } else {
            let parent = rng.gen_range(0..specs.len());
            let branch = rng.gen_range(0..sizes[parent]);
            specs.push(SimplexSpec::child(size, parent, branch));
        }
        sizes.push(size);
        total += size;
    }
    Treeplex::build(&specs).unwrap()
}

/// A random behavioral strategy (per-simplex distributions), optionally with every
/// probability at least `floor`.
pub fn random_behavioral<R: Rng>(rng: &mut R, t: &Treeplex, floor: f64) -> Vec<f64> {
    let mut b = vec![0.0; t.dim()];
    for s in t.simplexes() {
        let n = s.size() as f64;
        let raw: Vec<f64> = (0..s.size())
            .map(|_| rng.gen_range(0.0..1.0) + 1e-3)
            .collect();
        let total: f64 = raw.iter().sum();
        for (i, r) in s.range.clone().zip(raw) {
            b[i] = floor + (1.0 - n * floor) * r / total;
        }
    }
    b
}

/// A random point strictly inside `Q^xi` (every behavioral probability above `xi`).
pub fn random_interior<R: Rng>(rng: &mut R, t: &Treeplex, xi: f64) -> Vec<f64> {
    let margin = 0.02;
    let n = t.max_simplex_size() as f64;
    let floor = xi + margin * (1.0 - n * xi) / n;
    t.behavioral_to_sequence(&random_behavioral(rng, t, floor))
        .into_inner()
}

/// Behavioral strategy of a sequence-form point, by direct division.
pub fn behavioral(t: &Treeplex, q: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; t.dim()];
    for s in t.simplexes() {
        let m = s.parent.map_or(1.0, |p| q[p]);
        for i in s.range.clone() {
            b[i] = if m > 0.0 {
                q[i] / m
            } else {
                1.0 / s.size() as f64
            };
        }
    }
    b
}

/// Expected payoff to player one from `n` under behavioral strategies indexed by sequence.
pub fn walk_value(game: &GameTree, n: NodeId, b: [&[f64]; 2]) -> f64 {
    match game.node(n) {
        Node::Terminal { payoff } => *payoff,
        Node::Chance { outcomes } => outcomes
            .iter()
            .map(|&(p, c)| p * walk_value(game, c, b))
            .sum(),
        Node::Decision {
            player,
            infoset,
            children,
        } => {
            let h = &game.infosets(*player)[*infoset];
            children
                .iter()
                .enumerate()
                .map(|(a, &c)| b[player.index()][h.sequence(a)] * walk_value(game, c, b))
                .sum()
        }
    }
}

/// Every pure behavioral strategy of `player`.
pub fn pure_strategies(game: &GameTree, player: Player) -> Vec<Vec<f64>> {
    let hs = game.infosets(player);
    let sizes: Vec<usize> = hs.iter().map(|h| h.num_actions()).collect();
    product(&sizes)
        .into_iter()
        .map(|choice| {
            let mut b = vec![0.0; game.num_sequences(player)];
            for (h, a) in hs.iter().zip(choice) {
                b[h.sequence(a)] = 1.0;
            }
            b
        })
        .collect()
}

/// Nash gap by enumerating both players' pure strategies.
pub fn brute_nash_gap(game: &GameTree, x: &[f64], y: &[f64]) -> f64 {
    let bx = behavioral(&game.treeplex(Player::One), x);
    let by = behavioral(&game.treeplex(Player::Two), y);
    let best1 = pure_strategies(game, Player::One)
        .iter()
        .map(|s| walk_value(game, game.root(), [s, &by]))
        .fold(f64::NEG_INFINITY, f64::max);
    let worst2 = pure_strategies(game, Player::Two)
        .iter()
        .map(|s| walk_value(game, game.root(), [&bx, s]))
        .fold(f64::INFINITY, f64::min);
    best1 - worst2
}

/// Probability that the opponent of `player` and chance play to each node.
pub fn others_reach(game: &GameTree, player: Player, b: [&[f64]; 2]) -> Vec<f64> {
    let mut reach = vec![0.0; game.num_nodes()];
    fn go(game: &GameTree, n: NodeId, w: f64, player: Player, b: [&[f64]; 2], reach: &mut [f64]) {
        reach[n] = w;
        match game.node(n) {
            Node::Terminal { .. } => {}
            Node::Chance { outcomes } => {
                for &(p, c) in outcomes {
                    go(game, c, w * p, player, b, reach);
                }
            }
            Node::Decision {
                player: who,
                infoset,
                children,
            } => {
                let h = &game.infosets(*who)[*infoset];
                for (a, &c) in children.iter().enumerate() {
                    let p = if *who == player {
                        1.0
                    } else {
                        b[who.index()][h.sequence(a)]
                    };
                    go(game, c, w * p, player, b, reach);
                }
            }
        }
    }
    go(game, game.root(), 1.0, player, b, &mut reach);
    reach
}

/// `(reach_mass, regret, zero_reach)` for every infoset of `player`, by enumerating
/// the player's pure strategies for the continuation below each infoset.
pub fn brute_infoset_regrets(
    game: &GameTree,
    x: &[f64],
    y: &[f64],
    player: Player,
) -> Vec<(f64, f64, bool)> {
    let b = [
        behavioral(&game.treeplex(Player::One), x),
        behavioral(&game.treeplex(Player::Two), y),
    ];
    let reach = others_reach(game, player, [&b[0], &b[1]]);
    let pures = pure_strategies(game, player);
    let sign = player.sign();
    game.infosets(player)
        .iter()
        .map(|h| {
            let mass: f64 = h.nodes.iter().map(|&n| reach[n]).sum();
            let zero = mass == 0.0;
            let weight = |n: NodeId| {
                if zero {
                    1.0 / h.nodes.len() as f64
                } else {
                    reach[n] / mass
                }
            };
            let value = |own: &[f64]| -> f64 {
                let mut prof = [b[0].as_slice(), b[1].as_slice()];
                prof[player.index()] = own;
                h.nodes
                    .iter()
                    .map(|&n| weight(n) * sign * walk_value(game, n, prof))
                    .sum()
            };
            let current = value(&b[player.index()]);
            let best = pures
                .iter()
                .map(|s| value(s))
                .fold(f64::NEG_INFINITY, f64::max);
            (mass, best - current, zero)
        })
        .collect()
}

/// `max_{q in simplex^xi} <g, q> - s sum phi log phi` by pairwise golden-section
/// coordinate ascent, starting from the barycenter.
pub fn golden_conjugate(g: &[f64], s: f64, xi: f64) -> f64 {
    let n = g.len();
    let c = 1.0 - n as f64 * xi;
    let objective = |q: &[f64]| -> f64 {
        let lin: f64 = g.iter().zip(q).map(|(a, b)| a * b).sum();
        let ent: f64 = q
            .iter()
            .map(|&v| {
                let phi = ((v - xi) / c).max(0.0);
                if phi > 0.0 {
                    phi * phi.ln()
                } else {
                    0.0
                }
            })
            .sum();
        lin - s * ent
    };
    let mut q = vec![1.0 / n as f64; n];
    if n == 1 {
        return objective(&q);
    }
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let before = objective(&q);
        for i in 0..n {
            for j in (i + 1)..n {
                // move mass t from j to i, keeping both at least xi
                let (mut lo, mut hi) = (-(q[i] - xi), q[j] - xi);
                let at = |t: f64, q: &[f64]| {
                    let mut r = q.to_vec();
                    r[i] += t;
                    r[j] -= t;
                    objective(&r)
                };
                for _ in 0..100 {
                    let a = hi - ratio * (hi - lo);
                    let b = lo + ratio * (hi - lo);
                    if at(a, &q) < at(b, &q) {
                        lo = a;
                    } else {
                        hi = b;
                    }
                }
                let t = 0.5 * (lo + hi);
                q[i] += t;
                q[j] -= t;
            }
        }
        if (objective(&q) - before).abs() < 1e-15 {
            break;
        }
    }
    objective(&q)
}

/// CFR+ by explicit tree walks: `(regrets, numerators)` per player after
/// `iterations` alternating iterations.
pub fn tree_walk_cfr_plus(game: &GameTree, iterations: usize) -> [(Vec<f64>, Vec<f64>); 2] {
    let mut regrets = [
        vec![0.0; game.num_sequences(Player::One)],
        vec![0.0; game.num_sequences(Player::Two)],
    ];
    let mut numerators = regrets.clone();
    let strategy = |regrets: &[f64], player: Player| {
        let mut out = vec![0.0; regrets.len()];
        for h in game.infosets(player) {
            let r = h.seq_start..h.seq_start + h.num_actions();
            let total: f64 = regrets[r.clone()].iter().sum();
            for i in r {
                out[i] = if total > 0.0 {
                    regrets[i] / total
                } else {
                    1.0 / h.num_actions() as f64
                };
            }
        }
        out
    };
    for t in 1..=iterations {
        for player in Player::BOTH {
            let sigma = [
                strategy(&regrets[0], Player::One),
                strategy(&regrets[1], Player::Two),
            ];
            let mut delta = vec![0.0; regrets[player.index()].len()];
            let mut reach = vec![0.0; delta.len()];
            cfr_walk(
                game,
                game.root(),
                player,
                &sigma,
                1.0,
                1.0,
                &mut delta,
                &mut reach,
            );
            for (n, r) in numerators[player.index()].iter_mut().zip(&reach) {
                *n += t as f64 * r;
            }
            for (r, d) in regrets[player.index()].iter_mut().zip(&delta) {
                *r = (*r + d).max(0.0);
            }
        }
    }
    [
        (regrets[0].clone(), numerators[0].clone()),
        (regrets[1].clone(), numerators[1].clone()),
    ]
}

#[allow(clippy::too_many_arguments)]
fn cfr_walk(
    game: &GameTree,
    n: NodeId,
    player: Player,
    sigma: &[Vec<f64>; 2],
    own: f64,
    others: f64,
    delta: &mut [f64],
    reach: &mut [f64],
) -> f64 {
    match game.node(n) {
        Node::Terminal { payoff } => player.sign() * payoff,
        Node::Chance { outcomes } => outcomes
            .iter()
            .map(|&(p, c)| p * cfr_walk(game, c, player, sigma, own, others * p, delta, reach))
            .sum(),
        Node::Decision {
            player: who,
            infoset,
            children,
        } => {
            let h = &game.infosets(*who)[*infoset];
            let probs = &sigma[who.index()][h.seq_start..h.seq_start + children.len()];
            if *who != player {
                return children
                    .iter()
                    .zip(probs)
                    .map(|(&c, &p)| {
                        p * cfr_walk(game, c, player, sigma, own, others * p, delta, reach)
                    })
                    .sum();
            }
            let values: Vec<f64> = children
                .iter()
                .zip(probs)
                .map(|(&c, &p)| cfr_walk(game, c, player, sigma, own * p, others, delta, reach))
                .collect();
            let value: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
            for (a, (v, p)) in values.iter().zip(probs).enumerate() {
                delta[h.sequence(a)] += others * (v - value);
                reach[h.sequence(a)] = own * p;
            }
            value
        }
    }
}

/// The dilated entropy formula without any feasibility check.
pub fn raw_dgf(t: &Treeplex, q: &[f64], w: &DgfWeights, xi: f64) -> f64 {
    t.simplexes()
        .iter()
        .map(|s| {
            let m = t.parent_mass(s, q);
            let c = 1.0 - s.size() as f64 * xi;
            let local: f64 = q[s.range.clone()]
                .iter()
                .map(|&v| {
                    let phi = (v / m - xi) / c;
                    phi * phi.ln()
                })
                .sum();
            w.weight(s.id) * m * local
        })
        .sum()
}
