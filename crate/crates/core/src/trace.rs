//! Convergence traces shared by the solvers and the benchmark CLI.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub traversals: u64,
    /// Saddle gap in the unperturbed game.
    pub nash_gap: f64,
    pub max_infoset_regret: Option<f64>,
    /// Saddle gap against best responses in the perturbed polytopes.
    pub saddle_gap_perturbed: f64,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

pub const CSV_HEADER: [&str; 7] = [
    "iteration",
    "traversals",
    "nash_gap",
    "max_infoset_regret",
    "saddle_gap_perturbed",
    "mu1",
    "mu2",
];

fn num(v: f64) -> String {
    format!("{v:e}")
}

impl SolverTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Writes `#`-prefixed metadata lines, then the CSV header and one row per trace point.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &[(String, String)]) -> Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| crate::Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            w.write_record([
                r.iteration.to_string(),
                r.traversals.to_string(),
                num(r.nash_gap),
                opt(r.max_infoset_regret),
                num(r.saddle_gap_perturbed),
                opt(r.mu1),
                opt(r.mu2),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(usize),
    Traversals(u64),
}

impl Budget {
    pub fn exhausted(self, iterations: usize, traversals: u64) -> bool {
        match self {
            Budget::Iterations(n) => iterations >= n,
            Budget::Traversals(n) => traversals >= n,
        }
    }
}

/// When to record a trace point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cadence {
    /// After every iteration.
    EveryIteration,
    /// Whenever the traversal count has grown by this factor since the last point.
    Geometric(f64),
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence::Geometric(1.25)
    }
}

/// Tracks the next traversal count at which to record.
#[derive(Debug, Clone)]
pub struct Schedule {
    cadence: Cadence,
    next: u64,
}

impl Schedule {
    pub fn new(cadence: Cadence) -> Self {
        Schedule { cadence, next: 0 }
    }

    /// Whether a point is due at `traversals`; advances the schedule if so.
    pub fn due(&mut self, traversals: u64) -> bool {
        match self.cadence {
            Cadence::EveryIteration => true,
            Cadence::Geometric(ratio) => {
                if traversals < self.next {
                    return false;
                }
                let grown = (traversals as f64 * ratio).ceil() as u64;
                self.next = grown.max(traversals + 1);
                true
            }
        }
    }
}
