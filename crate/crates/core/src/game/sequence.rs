use std::sync::atomic::{AtomicU64, Ordering};

use super::{GameTree, Node, NodeId, Player};
use crate::error::{Error, Result};
use crate::treeplex::Treeplex;

/// Sparse matrix in coordinate form, sorted row-major with no duplicate cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SparseMatrix {
    /// Sorts the triplets, sums duplicate cells and drops exact zeros.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::Argument(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 as usize == r && last.1 as usize == c => last.2 += v,
                _ => entries.push((r as u32, c as u32, v)),
            }
        }
        entries.retain(|e| e.2 != 0.0);
        Ok(SparseMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let triplets = dense
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v)))
            .collect();
        SparseMatrix::from_triplets(rows, cols, triplets).expect("dense shape is consistent")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries
            .iter()
            .map(|&(r, c, v)| (r as usize, c as usize, v))
    }

    /// `A v`.
    pub fn mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Argument(format!(
                "vector of length {} for a matrix with {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for &(r, c, a) in &self.entries {
            out[r as usize] += a * v[c as usize];
        }
        Ok(out)
    }

    /// `A^T v`.
    pub fn mul_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::Argument(format!(
                "vector of length {} for a matrix with {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for &(r, c, a) in &self.entries {
            out[c as usize] += a * v[r as usize];
        }
        Ok(out)
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }
}

/// The bilinear saddle-point problem `min_x max_y <x, A y>`.
///
/// Row and column 0 of `A` belong to the empty sequence, whose realization
/// weight is always 1; row `i + 1` is sequence `i` of the player-one treeplex
/// (likewise for columns). Entries hold the *negated* payoff to player one
/// times chance reach, so player one minimizes.
#[derive(Debug)]
pub struct SequenceFormProblem {
    a: SparseMatrix,
    x: Treeplex,
    y: Treeplex,
    traversal_cost: usize,
    traversals: AtomicU64,
}

impl Clone for SequenceFormProblem {
    fn clone(&self) -> Self {
        SequenceFormProblem {
            a: self.a.clone(),
            x: self.x.clone(),
            y: self.y.clone(),
            traversal_cost: self.traversal_cost,
            traversals: AtomicU64::new(self.traversals()),
        }
    }
}

impl SequenceFormProblem {
    /// Assembles the payoff matrix and both treeplexes of `game`.
    pub fn from_game(game: &GameTree) -> SequenceFormProblem {
        let x = game.treeplex(Player::One);
        let y = game.treeplex(Player::Two);
        let mut triplets = Vec::with_capacity(game.num_terminals());
        // (node, augmented sequence of each player, chance reach)
        let mut stack: Vec<(NodeId, [usize; 2], f64)> = vec![(game.root(), [0, 0], 1.0)];
        while let Some((n, seqs, chance)) = stack.pop() {
            match game.node(n) {
                Node::Terminal { payoff } => triplets.push((seqs[0], seqs[1], -payoff * chance)),
                Node::Chance { outcomes } => {
                    for &(p, c) in outcomes {
                        stack.push((c, seqs, chance * p));
                    }
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let h = &game.infosets(*player)[*infoset];
                    for (a, &c) in children.iter().enumerate() {
                        let mut next = seqs;
                        next[player.index()] = h.sequence(a) + 1;
                        stack.push((c, next, chance));
                    }
                }
            }
        }
        let a = SparseMatrix::from_triplets(x.dim() + 1, y.dim() + 1, triplets)
            .expect("sequence indices are within the treeplexes");
        SequenceFormProblem {
            a,
            x,
            y,
            traversal_cost: game.num_nodes(),
            traversals: AtomicU64::new(0),
        }
    }

    /// Wraps an explicit augmented matrix and treeplexes.
    pub fn new(a: SparseMatrix, x: Treeplex, y: Treeplex) -> Result<SequenceFormProblem> {
        if a.rows() != x.dim() + 1 || a.cols() != y.dim() + 1 {
            return Err(Error::Argument(format!(
                "matrix is {}x{} but treeplexes need {}x{}",
                a.rows(),
                a.cols(),
                x.dim() + 1,
                y.dim() + 1
            )));
        }
        let traversal_cost = a.nnz();
        Ok(SequenceFormProblem {
            a,
            x,
            y,
            traversal_cost,
            traversals: AtomicU64::new(0),
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn x(&self) -> &Treeplex {
        &self.x
    }

    pub fn y(&self) -> &Treeplex {
        &self.y
    }

    pub fn treeplex(&self, player: Player) -> &Treeplex {
        match player {
            Player::One => &self.x,
            Player::Two => &self.y,
        }
    }

    pub fn traversal_cost(&self) -> usize {
        self.traversal_cost
    }

    /// Number of `apply_a`/`apply_at` calls so far.
    pub fn traversals(&self) -> u64 {
        self.traversals.load(Ordering::Relaxed)
    }

    /// `max_{i,j} |A_{ij}|`.
    pub fn matrix_norm(&self) -> f64 {
        self.a.max_abs()
    }

    /// `A v` over augmented sequence vectors; counts one traversal.
    pub fn apply_a(&self, v: &[f64]) -> Result<Vec<f64>> {
        let out = self.a.mul(v)?;
        self.traversals.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// `A^T v` over augmented sequence vectors; counts one traversal.
    pub fn apply_at(&self, v: &[f64]) -> Result<Vec<f64>> {
        let out = self.a.mul_transpose(v)?;
        self.traversals.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// `A [1; y]`: entry 0 is the constant part, entries `1..` the gradient in `x`.
    pub fn mul_y(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.apply_a(&augment(y))
    }

    /// `A^T [1; x]`: entry 0 is the constant part, entries `1..` the gradient in `y`.
    pub fn mul_x(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_at(&augment(x))
    }

    /// `<[1; x], A [1; y]>` computed directly, without touching the traversal counter.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let at = |v: &[f64], i: usize| if i == 0 { 1.0 } else { v[i - 1] };
        self.a
            .entries()
            .map(|(r, c, a)| at(x, r) * a * at(y, c))
            .sum()
    }

    /// Expected payoff to player one.
    pub fn payoff_p1(&self, x: &[f64], y: &[f64]) -> f64 {
        -self.objective(x, y)
    }
}

/// Prepends the empty sequence's weight of 1.
pub fn augment(q: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(q.len() + 1);
    v.push(1.0);
    v.extend_from_slice(q);
    v
}
