//! Excessive gap technique over perturbed treeplexes.
//!
//! Player one minimizes `<[1; x], A [1; y]>` over `X^xi`, player two maximizes
//! over `Y^xi`. Both are smoothed with weighted dilated entropy; each step
//! shrinks one of the two smoothing parameters while keeping
//! `f_mu2(x) <= phi_mu1(y)`.

use crate::error::{Error, Result};
use crate::game::{GameTree, SequenceFormProblem};
use crate::metrics::{saddle_gap_from_products, RegretEvaluator};
use crate::smoothing::{
    dgf_min, entropy_diameter_bound, smoothed_best_response, DgfWeights, SmoothedResponse,
};
use crate::trace::{Budget, Cadence, Schedule, SolverTrace, TraceRow};
use crate::treeplex::{Perturbation, Treeplex, TreeplexPoint};

/// Slack allowed in the excessive gap condition.
pub const GAP_TOL: f64 = 1e-7;

/// Norm pairing used to set the initial smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modulus {
    /// Strong convexity `1 / M_Q` in the l1 norm, with `||A||` the largest entry.
    L1,
    /// Strong convexity 1 in the l2 norm, with `||A||` the Frobenius norm.
    #[default]
    L2,
}

impl Modulus {
    pub fn name(self) -> &'static str {
        match self {
            Modulus::L1 => "l1",
            Modulus::L2 => "l2",
        }
    }
}

impl std::str::FromStr for Modulus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Modulus::L1),
            "l2" => Ok(Modulus::L2),
            _ => Err(Error::Argument(format!(
                "unknown modulus {s:?} (expected l1 or l2)"
            ))),
        }
    }
}

/// Strong convexity modulus of the weighted entropy on `t`.
///
/// The modulus is taken for the unscaled weights, so a weight scale below 1
/// shrinks the smoothing relative to the theoretical setting.
pub fn strong_convexity_modulus(t: &Treeplex, modulus: Modulus) -> f64 {
    match modulus {
        Modulus::L1 => 1.0 / t.max_l1(),
        Modulus::L2 => 1.0,
    }
}

/// Operator norm of the payoff matrix paired with `modulus`.
pub fn operator_norm(p: &SequenceFormProblem, modulus: Modulus) -> f64 {
    match modulus {
        Modulus::L1 => p.matrix_norm(),
        Modulus::L2 => p
            .matrix()
            .entries()
            .map(|(_, _, a)| a * a)
            .sum::<f64>()
            .sqrt(),
    }
}

/// Initial `(mu1, mu2)`, equal and with product `||A||^2 / (phi_x phi_y)`.
///
/// A zero matrix gets `(1, 1)`.
pub fn lipschitz_mu_init(norm: f64, phi_x: f64, phi_y: f64) -> (f64, f64) {
    if norm == 0.0 {
        return (1.0, 1.0);
    }
    let mu = norm / (phi_x * phi_y).sqrt();
    (mu, mu)
}

/// Iterations after which the unperturbed gap is guaranteed below `eps`.
pub fn iteration_bound(p: &SequenceFormProblem, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Argument(format!(
            "target gap must be positive, got {eps}"
        )));
    }
    let dx = entropy_diameter_bound(p.x()) / (p.x().max_simplex_size() as f64).ln();
    let dy = entropy_diameter_bound(p.y()) / (p.y().max_simplex_size() as f64).ln();
    let m = p.x().max_simplex_size().max(p.y().max_simplex_size()) as f64;
    Ok(p.matrix_norm() * (dx * dy).sqrt() * m.ln() / eps)
}

/// Which smoothing parameter the next step shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Focus {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct EgtState {
    pub x: TreeplexPoint,
    pub y: TreeplexPoint,
    pub mu1: f64,
    pub mu2: f64,
    /// Steps taken since initialization.
    pub k: usize,
    /// `A [1; y]`
    ay: Vec<f64>,
    /// `A^T [1; x]`
    atx: Vec<f64>,
}

impl EgtState {
    pub fn ay(&self) -> &[f64] {
        &self.ay
    }

    pub fn atx(&self) -> &[f64] {
        &self.atx
    }

    /// Shrink coefficient of the next step.
    pub fn tau(&self) -> f64 {
        2.0 / (self.k as f64 + 3.0)
    }

    pub fn next_focus(&self) -> Focus {
        if self.k.is_multiple_of(2) {
            Focus::X
        } else {
            Focus::Y
        }
    }
}

/// Both sides of the excessive gap condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessiveGap {
    /// `max_y <x, A y> - mu2 d_Y(y)`, shifted so the entropy minimum is 0.
    pub f: f64,
    /// `min_x <x, A y> + mu1 d_X(x)`, shifted likewise.
    pub phi: f64,
}

impl ExcessiveGap {
    pub fn holds(&self) -> bool {
        self.f <= self.phi + GAP_TOL
    }
}

#[derive(Debug, Clone)]
pub struct Egt<'p> {
    problem: &'p SequenceFormProblem,
    wx: DgfWeights,
    wy: DgfWeights,
    xi: Perturbation,
    modulus: Modulus,
    dmin_x: f64,
    dmin_y: f64,
    check_gap: bool,
    traversals: u64,
}

impl<'p> Egt<'p> {
    pub fn new(
        problem: &'p SequenceFormProblem,
        wx: DgfWeights,
        wy: DgfWeights,
        xi: Perturbation,
    ) -> Result<Egt<'p>> {
        xi.check(problem.x())?;
        xi.check(problem.y())?;
        let dmin_x = dgf_min(problem.x(), &wx, xi)?;
        let dmin_y = dgf_min(problem.y(), &wy, xi)?;
        Ok(Egt {
            problem,
            wx,
            wy,
            xi,
            modulus: Modulus::default(),
            dmin_x,
            dmin_y,
            check_gap: true,
            traversals: 0,
        })
    }

    pub fn with_modulus(mut self, modulus: Modulus) -> Self {
        self.modulus = modulus;
        self
    }

    /// Disables the per-step excessive gap check.
    pub fn unchecked(mut self) -> Self {
        self.check_gap = false;
        self
    }

    pub fn perturbation(&self) -> Perturbation {
        self.xi
    }

    pub fn weights(&self) -> (&DgfWeights, &DgfWeights) {
        (&self.wx, &self.wy)
    }

    /// Traversals performed by this solver.
    pub fn traversals(&self) -> u64 {
        self.traversals
    }

    fn mul_x(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.traversals += 1;
        self.problem.mul_x(x)
    }

    fn mul_y(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        self.traversals += 1;
        self.problem.mul_y(y)
    }

    /// Player one's smoothed response to the gradient `g` of the objective it maximizes.
    fn sbr_x(&self, g: &[f64], mu: f64) -> Result<SmoothedResponse> {
        smoothed_best_response(self.problem.x(), g, &self.wx, self.xi, mu)
    }

    fn sbr_y(&self, g: &[f64], mu: f64) -> Result<SmoothedResponse> {
        smoothed_best_response(self.problem.y(), g, &self.wy, self.xi, mu)
    }

    pub fn init(&mut self) -> Result<EgtState> {
        let phi_x = strong_convexity_modulus(self.problem.x(), self.modulus);
        let phi_y = strong_convexity_modulus(self.problem.y(), self.modulus);
        let (mu1, mu2) = lipschitz_mu_init(operator_norm(self.problem, self.modulus), phi_x, phi_y);
        let center = self.sbr_x(&vec![0.0; self.problem.x().dim()], 1.0)?.point;
        let atx_center = self.mul_x(&center)?;
        let y = self.sbr_y(&atx_center[1..], mu2)?.point;
        let ay = self.mul_y(&y)?;
        let x = self.sbr_x(&negate(&ay[1..]), mu1)?.point;
        let atx = self.mul_x(&x)?;
        let state = EgtState {
            x,
            y,
            mu1,
            mu2,
            k: 0,
            ay,
            atx,
        };
        self.check(&state)?;
        Ok(state)
    }

    fn check(&self, s: &EgtState) -> Result<()> {
        if !self.check_gap {
            return Ok(());
        }
        let gap = self.excessive_gap(s)?;
        if !gap.holds() {
            return Err(Error::Invariant(format!(
                "excessive gap violated after step {}: f = {:.12e} > phi = {:.12e}",
                s.k, gap.f, gap.phi
            )));
        }
        Ok(())
    }

    pub fn excessive_gap(&self, s: &EgtState) -> Result<ExcessiveGap> {
        let f = s.atx[0] + self.sbr_y(&s.atx[1..], s.mu2)?.value + s.mu2 * self.dmin_y;
        let phi = s.ay[0] - self.sbr_x(&negate(&s.ay[1..]), s.mu1)?.value - s.mu1 * self.dmin_x;
        Ok(ExcessiveGap { f, phi })
    }

    /// One shrink step, alternating between the players.
    pub fn step(&mut self, s: &mut EgtState) -> Result<()> {
        let tau = s.tau();
        match s.next_focus() {
            Focus::X => self.step_x(s, tau)?,
            Focus::Y => self.step_y(s, tau)?,
        }
        s.k += 1;
        self.check(s)
    }

    fn step_x(&mut self, s: &mut EgtState, tau: f64) -> Result<()> {
        let g_prev = negate(&s.ay[1..]);
        let x_breve = self.sbr_x(&g_prev, s.mu1)?.point;
        let x_hat = mix(&s.x, &x_breve, tau);
        let atx_hat = self.mul_x(&x_hat)?;
        let y_hat = self.sbr_y(&atx_hat[1..], s.mu2)?.point;
        let ay_hat = self.mul_y(&y_hat)?;
        let step = tau / (1.0 - tau);
        let g: Vec<f64> = g_prev
            .iter()
            .zip(&ay_hat[1..])
            .map(|(a, b)| a - step * b)
            .collect();
        let x_tilde = self.sbr_x(&g, s.mu1)?.point;
        s.x = mix(&s.x, &x_tilde, tau);
        s.y = mix(&s.y, &y_hat, tau);
        s.ay = mix(&s.ay, &ay_hat, tau).into_inner();
        s.atx = self.mul_x(&s.x)?;
        s.mu1 *= 1.0 - tau;
        Ok(())
    }

    fn step_y(&mut self, s: &mut EgtState, tau: f64) -> Result<()> {
        let g_prev = s.atx[1..].to_vec();
        let y_breve = self.sbr_y(&g_prev, s.mu2)?.point;
        let y_hat = mix(&s.y, &y_breve, tau);
        let ay_hat = self.mul_y(&y_hat)?;
        let x_hat = self.sbr_x(&negate(&ay_hat[1..]), s.mu1)?.point;
        let atx_hat = self.mul_x(&x_hat)?;
        let step = tau / (1.0 - tau);
        let g: Vec<f64> = g_prev
            .iter()
            .zip(&atx_hat[1..])
            .map(|(a, b)| a + step * b)
            .collect();
        let y_tilde = self.sbr_y(&g, s.mu2)?.point;
        s.y = mix(&s.y, &y_tilde, tau);
        s.x = mix(&s.x, &x_hat, tau);
        s.atx = mix(&s.atx, &atx_hat, tau).into_inner();
        s.ay = self.mul_y(&s.y)?;
        s.mu2 *= 1.0 - tau;
        Ok(())
    }

    /// Saddle gap of the current iterate against best responses in `Q^xi`.
    pub fn saddle_gap(&self, s: &EgtState, xi: Perturbation) -> Result<f64> {
        saddle_gap_from_products(self.problem, &s.ay, &s.atx, xi)
    }
}

fn negate(v: &[f64]) -> Vec<f64> {
    v.iter().map(|a| -a).collect()
}

/// `(1 - tau) a + tau b`
fn mix(a: &[f64], b: &[f64], tau: f64) -> TreeplexPoint {
    TreeplexPoint(
        a.iter()
            .zip(b)
            .map(|(u, v)| (1.0 - tau) * u + tau * v)
            .collect(),
    )
}

/// Optional extras for a traced run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'g> {
    /// When set, trace rows include the largest per-infoset regret.
    pub game: Option<&'g GameTree>,
    pub cadence: Cadence,
    pub modulus: Modulus,
}

/// Runs EGT until `budget` is spent, recording trace points along the way.
///
/// The unperturbed Nash gap and the perturbed saddle gap come from cached
/// products and cost no traversals; the final state is always recorded.
pub fn egt_run(
    problem: &SequenceFormProblem,
    wx: DgfWeights,
    wy: DgfWeights,
    xi: Perturbation,
    budget: Budget,
    opts: RunOptions<'_>,
) -> Result<(EgtState, SolverTrace)> {
    let mut egt = Egt::new(problem, wx, wy, xi)?.with_modulus(opts.modulus);
    let mut regret = opts.game.map(RegretEvaluator::new);
    let mut state = egt.init()?;
    let mut schedule = Schedule::new(opts.cadence);
    let mut trace = SolverTrace::default();
    let mut record = |egt: &Egt, s: &EgtState, trace: &mut SolverTrace| -> Result<()> {
        let max_infoset_regret = match regret.as_mut() {
            Some(r) => Some(r.max_regret(&s.x, &s.y)?),
            None => None,
        };
        trace.rows.push(TraceRow {
            iteration: s.k,
            traversals: egt.traversals(),
            nash_gap: egt.saddle_gap(s, Perturbation::NONE)?,
            max_infoset_regret,
            saddle_gap_perturbed: egt.saddle_gap(s, xi)?,
            mu1: Some(s.mu1),
            mu2: Some(s.mu2),
        });
        Ok(())
    };
    while !budget.exhausted(state.k, egt.traversals()) {
        egt.step(&mut state)?;
        if schedule.due(egt.traversals()) {
            record(&egt, &state, &mut trace)?;
        }
    }
    if trace.last().map(|r| r.iteration) != Some(state.k) {
        record(&egt, &state, &mut trace)?;
    }
    Ok((state, trace))
}
