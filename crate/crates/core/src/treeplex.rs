//! Sequence-form strategy polytopes.
//!
//! A treeplex is stored as a flat vector of sequences. Each simplex owns a
//! contiguous index range and is scaled by one parent sequence (or by the
//! constant 1 when no branching precedes it). Simplexes are numbered in
//! topological order, so a parent sequence always belongs to a simplex with a
//! smaller id and a single forward pass visits parents before children.

use std::fmt::Write as _;
use std::ops::{Deref, DerefMut, Range};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(q^j) == q_{p_j}`.
pub const SUM_TOL: f64 = 1e-9;
/// Slack on the perturbation bound `q_i >= xi * q_{p_j}`.
pub const BOUND_TOL: f64 = 1e-12;

/// Where a simplex hangs in the treeplex: below sequence `branch` of simplex `simplex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentLink {
    pub simplex: usize,
    pub branch: usize,
}

/// Input to [`Treeplex::build`]: one entry per simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexSpec {
    pub size: usize,
    pub parent: Option<ParentLink>,
}

impl SimplexSpec {
    pub fn root(size: usize) -> Self {
        SimplexSpec { size, parent: None }
    }

    pub fn child(size: usize, simplex: usize, branch: usize) -> Self {
        SimplexSpec {
            size,
            parent: Some(ParentLink { simplex, branch }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexInfo {
    pub id: usize,
    /// Sequence indices owned by this simplex.
    pub range: Range<usize>,
    /// Parent sequence index; `None` is the root sentinel (`q_{p_j} = 1`).
    pub parent: Option<usize>,
    /// For each branch of this simplex, the simplexes it scales.
    pub children: Vec<Vec<usize>>,
    /// Longest chain of branchings below this simplex (0 for leaves).
    pub depth: usize,
    /// Number of branching operations above this simplex.
    pub branchings: usize,
}

impl SimplexInfo {
    pub fn size(&self) -> usize {
        self.range.len()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(Vec::is_empty)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Treeplex {
    n: usize,
    simplexes: Vec<SimplexInfo>,
    owner: Vec<usize>,
    depth: usize,
    max_l1: f64,
}

impl Treeplex {
    /// Builds a treeplex from per-simplex sizes and parent links.
    ///
    /// Simplexes are renumbered in a stable topological order (input order is
    /// kept when it is already topological) and laid out contiguously.
    pub fn build(specs: &[SimplexSpec]) -> Result<Treeplex> {
        let k = specs.len();
        for (j, s) in specs.iter().enumerate() {
            if s.size == 0 {
                return Err(Error::Structure(format!("simplex {j} has size 0")));
            }
            if let Some(link) = s.parent {
                let parent = specs.get(link.simplex).ok_or_else(|| {
                    Error::Structure(format!(
                        "simplex {j} links to missing simplex {}",
                        link.simplex
                    ))
                })?;
                if link.branch >= parent.size {
                    return Err(Error::Structure(format!(
                        "simplex {j} links to branch {} of simplex {} which has size {}",
                        link.branch, link.simplex, parent.size
                    )));
                }
            }
        }

        // Kahn's algorithm, always taking the smallest ready id.
        let mut pending: Vec<usize> = vec![0; k];
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (j, s) in specs.iter().enumerate() {
            if let Some(link) = s.parent {
                pending[j] = 1;
                dependents[link.simplex].push(j);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..k).filter(|&j| pending[j] == 0).collect();
        let mut order = Vec::with_capacity(k);
        while let Some(j) = ready.pop_first() {
            order.push(j);
            for &d in &dependents[j] {
                pending[d] -= 1;
                if pending[d] == 0 {
                    ready.insert(d);
                }
            }
        }
        if order.len() != k {
            let stuck: Vec<usize> = (0..k).filter(|&j| pending[j] > 0).collect();
            return Err(Error::Structure(format!(
                "cycle in branching links among simplexes {stuck:?}"
            )));
        }

        let mut new_id = vec![0; k];
        for (pos, &j) in order.iter().enumerate() {
            new_id[j] = pos;
        }
        let mut starts = vec![0; k];
        let mut next = 0;
        for &j in &order {
            starts[j] = next;
            next += specs[j].size;
        }
        let layout = order
            .iter()
            .map(|&j| {
                let parent = specs[j]
                    .parent
                    .map(|link| starts[link.simplex] + link.branch);
                (starts[j], specs[j].size, parent)
            })
            .collect();
        Treeplex::from_layout(next, layout)
    }

    /// Builds a treeplex from explicit `(start, size, parent_sequence)` entries,
    /// listed in simplex-id order.
    pub fn from_layout(n: usize, layout: Vec<(usize, usize, Option<usize>)>) -> Result<Treeplex> {
        let mut owner = vec![usize::MAX; n];
        for (j, &(start, size, _)) in layout.iter().enumerate() {
            if size == 0 {
                return Err(Error::Structure(format!("simplex {j} has size 0")));
            }
            if start + size > n {
                return Err(Error::Structure(format!(
                    "simplex {j} range {start}..{} exceeds dimension {n}",
                    start + size
                )));
            }
            for slot in &mut owner[start..start + size] {
                if *slot != usize::MAX {
                    return Err(Error::Structure(format!(
                        "simplex {j} overlaps simplex {} at sequence {}",
                        *slot, start
                    )));
                }
                *slot = j;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Structure(format!(
                "sequence {i} is not covered by any simplex"
            )));
        }

        let mut simplexes: Vec<SimplexInfo> = layout
            .iter()
            .enumerate()
            .map(|(j, &(start, size, parent))| SimplexInfo {
                id: j,
                range: start..start + size,
                parent,
                children: vec![Vec::new(); size],
                depth: 0,
                branchings: 0,
            })
            .collect();

        for j in 0..simplexes.len() {
            if let Some(p) = simplexes[j].parent {
                if p >= n {
                    return Err(Error::Structure(format!(
                        "simplex {j} has parent sequence {p} outside dimension {n}"
                    )));
                }
                let ps = owner[p];
                if ps >= j {
                    return Err(Error::Structure(format!(
                        "simplex {j} has parent sequence {p} in simplex {ps}; \
                         parents must precede children"
                    )));
                }
                let branch = p - simplexes[ps].range.start;
                simplexes[ps].children[branch].push(j);
                simplexes[j].branchings = simplexes[ps].branchings + 1;
            }
        }
        for j in (0..simplexes.len()).rev() {
            let depth = simplexes[j]
                .children
                .iter()
                .flatten()
                .map(|&c| simplexes[c].depth + 1)
                .max()
                .unwrap_or(0);
            simplexes[j].depth = depth;
        }
        let depth = simplexes
            .iter()
            .filter(|s| s.is_root())
            .map(|s| s.depth)
            .max()
            .unwrap_or(0);

        let mut t = Treeplex {
            n,
            simplexes,
            owner,
            depth,
            max_l1: 0.0,
        };
        t.max_l1 = t.max_l1_cutoff(usize::MAX);
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn simplexes(&self) -> &[SimplexInfo] {
        &self.simplexes
    }

    pub fn simplex(&self, j: usize) -> &SimplexInfo {
        &self.simplexes[j]
    }

    pub fn num_simplexes(&self) -> usize {
        self.simplexes.len()
    }

    /// Simplex owning sequence `i`.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn roots(&self) -> impl Iterator<Item = &SimplexInfo> {
        self.simplexes.iter().filter(|s| s.is_root())
    }

    /// Size of the largest simplex.
    pub fn max_simplex_size(&self) -> usize {
        self.simplexes
            .iter()
            .map(SimplexInfo::size)
            .max()
            .unwrap_or(0)
    }

    /// `M_Q`: the largest l1 norm of any point of the treeplex.
    pub fn max_l1(&self) -> f64 {
        self.max_l1
    }

    /// `M_{Q,r}`: the largest l1 mass over simplexes within `r` branchings of the root.
    pub fn max_l1_cutoff(&self, r: usize) -> f64 {
        let values = self.cutoff_values(r);
        self.roots().map(|s| values[s.id]).sum()
    }

    /// Per-simplex values of the cutoff DP: `value_r(j)` is the largest mass of the
    /// subtreeplex rooted at `j` counting simplexes at most `r` branchings below `j`.
    pub fn cutoff_values(&self, r: usize) -> Vec<f64> {
        let mut values = vec![0.0; self.simplexes.len()];
        for s in self.simplexes.iter().rev() {
            if s.branchings > r {
                continue;
            }
            let best = s
                .children
                .iter()
                .map(|kids| kids.iter().map(|&k| values[k]).sum::<f64>())
                .fold(0.0, f64::max);
            values[s.id] = 1.0 + best;
        }
        values
    }

    /// `M_{Q_j,r}` for the subtreeplex rooted at `j`, with branchings counted from `j`.
    pub fn subtree_max_l1_cutoff(&self, j: usize, r: usize) -> f64 {
        let base = self.simplexes[j].branchings;
        let mut values = vec![0.0; self.simplexes.len()];
        let mut stack = vec![j];
        let mut order = Vec::new();
        while let Some(s) = stack.pop() {
            order.push(s);
            stack.extend(self.simplexes[s].children.iter().flatten().copied());
        }
        for &s in order.iter().rev() {
            let info = &self.simplexes[s];
            if info.branchings - base > r {
                continue;
            }
            let best = info
                .children
                .iter()
                .map(|kids| kids.iter().map(|&k| values[k]).sum::<f64>())
                .fold(0.0, f64::max);
            values[s] = 1.0 + best;
        }
        values[j]
    }

    /// Mass of the parent sequence of simplex `s` in `q` (1 at roots).
    #[inline]
    pub fn parent_mass(&self, s: &SimplexInfo, q: &[f64]) -> f64 {
        s.parent.map_or(1.0, |p| q[p])
    }

    /// Checks membership in `Q^xi`.
    pub fn validate_point(&self, q: &[f64], xi: Perturbation) -> Result<bool> {
        if q.len() != self.n {
            return Err(Error::Argument(format!(
                "point has length {} but treeplex dimension is {}",
                q.len(),
                self.n
            )));
        }
        if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Ok(false);
        }
        for s in &self.simplexes {
            let mass = self.parent_mass(s, q);
            let local = &q[s.range.clone()];
            let sum: f64 = local.iter().sum();
            if (sum - mass).abs() > SUM_TOL {
                return Ok(false);
            }
            let floor = xi.value() * mass - BOUND_TOL;
            if local.iter().any(|&v| v < floor) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Pushes per-simplex behavioral distributions (laid out in sequence order)
    /// into sequence form.
    pub fn behavioral_to_sequence(&self, behavioral: &[f64]) -> TreeplexPoint {
        let mut q = behavioral.to_vec();
        for s in &self.simplexes {
            let mass = self.parent_mass(s, &q);
            for v in &mut q[s.range.clone()] {
                *v *= mass;
            }
        }
        TreeplexPoint(q)
    }

    /// Inverse of [`Treeplex::behavioral_to_sequence`]; simplexes with zero parent
    /// mass get the uniform distribution.
    pub fn sequence_to_behavioral(&self, q: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        for s in &self.simplexes {
            let local = &q[s.range.clone()];
            let sum: f64 = local.iter().sum();
            let out = &mut b[s.range.clone()];
            if sum > 0.0 {
                for (o, v) in out.iter_mut().zip(local) {
                    *o = v / sum;
                }
            } else {
                out.fill(1.0 / s.size() as f64);
            }
        }
        b
    }

    /// The uniform behavioral strategy in sequence form.
    pub fn uniform_point(&self) -> TreeplexPoint {
        let mut b = vec![0.0; self.n];
        for s in &self.simplexes {
            b[s.range.clone()].fill(1.0 / s.size() as f64);
        }
        self.behavioral_to_sequence(&b)
    }

    /// Line-oriented text form: a header with `n`, then `j parent size children`
    /// per simplex, where `parent` is a sequence index or `root` and `children`
    /// is a comma-separated list of child simplex ids or `-`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "treeplex n={} simplexes={}",
            self.n,
            self.simplexes.len()
        );
        for s in &self.simplexes {
            let parent = s
                .parent
                .map_or_else(|| "root".to_string(), |p| p.to_string());
            let kids: Vec<String> = s.children.iter().flatten().map(usize::to_string).collect();
            let kids = if kids.is_empty() {
                "-".to_string()
            } else {
                kids.join(",")
            };
            let _ = writeln!(out, "{} {} {} {}", s.id, parent, s.size(), kids);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Treeplex> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let mut n = None;
        let mut count = None;
        for tok in header.split_whitespace().skip(1) {
            let parse = |v: &str| {
                v.parse::<usize>().map_err(|e| Error::Parse {
                    line: hline + 1,
                    msg: format!("bad header value {v:?}: {e}"),
                })
            };
            if let Some(v) = tok.strip_prefix("n=") {
                n = Some(parse(v)?);
            } else if let Some(v) = tok.strip_prefix("simplexes=") {
                count = Some(parse(v)?);
            }
        }
        if !header.starts_with("treeplex") {
            return Err(Error::Parse {
                line: hline + 1,
                msg: "header must start with 'treeplex'".into(),
            });
        }
        let n = n.ok_or(Error::Parse {
            line: hline + 1,
            msg: "header is missing n=".into(),
        })?;

        let mut layout = Vec::new();
        let mut declared_children = Vec::new();
        let mut start = 0;
        for (ln, line) in lines {
            let err = |msg: String| Error::Parse { line: ln + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let j: usize = fields[0]
                .parse()
                .map_err(|_| err("bad simplex id".into()))?;
            if j != layout.len() {
                return Err(err(format!("simplex ids must be consecutive, found {j}")));
            }
            let parent = match fields[1] {
                "root" => None,
                p => Some(p.parse::<usize>().map_err(|_| err("bad parent".into()))?),
            };
            let size: usize = fields[2].parse().map_err(|_| err("bad size".into()))?;
            let mut kids: Vec<usize> = if fields[3] == "-" {
                Vec::new()
            } else {
                fields[3]
                    .split(',')
                    .map(|c| c.parse().map_err(|_| err(format!("bad child id {c:?}"))))
                    .collect::<Result<_>>()?
            };
            kids.sort_unstable();
            declared_children.push(kids);
            layout.push((start, size, parent));
            start += size;
        }
        if let Some(c) = count {
            if c != layout.len() {
                return Err(Error::Parse {
                    line: hline + 1,
                    msg: format!("header declares {c} simplexes, found {}", layout.len()),
                });
            }
        }
        let t = Treeplex::from_layout(n, layout)?;
        for (s, declared) in t.simplexes.iter().zip(&declared_children) {
            let mut actual: Vec<usize> = s.children.iter().flatten().copied().collect();
            actual.sort_unstable();
            if &actual != declared {
                return Err(Error::Structure(format!(
                    "simplex {} declares children {declared:?} but parent links give {actual:?}",
                    s.id
                )));
            }
        }
        Ok(t)
    }
}

/// A point in sequence form.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeplexPoint(pub Vec<f64>);

impl TreeplexPoint {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for TreeplexPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for TreeplexPoint {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for TreeplexPoint {
    fn from(v: Vec<f64>) -> Self {
        TreeplexPoint(v)
    }
}

/// Uniform minimum behavioral probability `xi`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Perturbation(f64);

impl Perturbation {
    pub const NONE: Perturbation = Perturbation(0.0);

    pub fn new(xi: f64) -> Result<Perturbation> {
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::Argument(format!(
                "xi must be finite and >= 0, got {xi}"
            )));
        }
        Ok(Perturbation(xi))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Checks that every perturbed simplex of `t` is nonempty.
    ///
    /// `n * xi == 1` collapses a simplex to a single point, which the smoothing
    /// map cannot invert, so it is rejected along with `n * xi > 1`.
    pub fn check(self, t: &Treeplex) -> Result<()> {
        for s in t.simplexes() {
            check_simplex(s.size(), self.0)?;
        }
        Ok(())
    }
}

pub(crate) fn check_simplex(size: usize, xi: f64) -> Result<()> {
    if size as f64 * xi >= 1.0 {
        return Err(Error::InfeasiblePerturbation { xi, size });
    }
    Ok(())
}
