//! Shape checks on Leduc with three ranks, sharing one set of traced runs.

use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use perturbed_egt::bench::tune_weight_scale;
use perturbed_egt::cfr::cfr_run;
use perturbed_egt::egt::{egt_run, Modulus, RunOptions};
use perturbed_egt::game::{build_leduc, GameTree, SequenceFormProblem};
use perturbed_egt::smoothing::{DgfWeights, WeightScheme};
use perturbed_egt::trace::{Budget, Cadence, SolverTrace, TraceRow};
use perturbed_egt::treeplex::Perturbation;

use super::{ensure, fail, Outcome};

pub const BUDGET: u64 = 3_000_000;

struct Run {
    trace: SolverTrace,
    secs: f64,
}

struct Setup {
    game: GameTree,
    problem: SequenceFormProblem,
    gamma: f64,
}

fn setup() -> Result<&'static Setup, String> {
    static SETUP: OnceLock<Result<Setup, String>> = OnceLock::new();
    SETUP
        .get_or_init(|| {
            let game = build_leduc(3).map_err(fail)?;
            let problem = SequenceFormProblem::from_game(&game);
            let (gamma, _) = tune_weight_scale(&problem, WeightScheme::Convergence, Modulus::L2)
                .map_err(fail)?;
            Ok(Setup {
                game,
                problem,
                gamma,
            })
        })
        .as_ref()
        .map_err(Clone::clone)
}

/// Perturbation bits (`None` for CFR+), whether regrets were traced, and the run.
type CacheEntry = (Option<u64>, bool, Arc<Run>);

/// `None` runs CFR+; regrets are traced only when asked for.
fn run(xi: Option<f64>, regret: bool) -> Result<Arc<Run>, String> {
    static CACHE: Mutex<Vec<CacheEntry>> = Mutex::new(Vec::new());
    let key = xi.map(f64::to_bits);
    let mut cache = CACHE.lock().unwrap();
    if let Some((_, _, r)) = cache
        .iter()
        .find(|(k, with, _)| *k == key && (*with || !regret))
    {
        return Ok(r.clone());
    }
    let s = setup()?;
    let start = Instant::now();
    let budget = Budget::Traversals(BUDGET);
    let trace = match xi {
        Some(xi) => {
            let weights = |t| {
                DgfWeights::compute(t, WeightScheme::Convergence)
                    .with_gamma(s.gamma)
                    .map_err(fail)
            };
            let opts = RunOptions {
                game: regret.then_some(&s.game),
                ..RunOptions::default()
            };
            let pert = Perturbation::new(xi).map_err(fail)?;
            let (_, trace) = egt_run(
                &s.problem,
                weights(s.problem.x())?,
                weights(s.problem.y())?,
                pert,
                budget,
                opts,
            )
            .map_err(|e| format!("egt xi={xi}: {e}"))?;
            trace
        }
        None => {
            cfr_run(&s.game, budget, Cadence::default(), regret)
                .map_err(fail)?
                .1
        }
    };
    let r = Arc::new(Run {
        trace,
        secs: start.elapsed().as_secs_f64(),
    });
    cache.push((key, regret, r.clone()));
    Ok(r)
}

/// `(traversals, value)` pairs.
type Curve = Vec<(f64, f64)>;

/// The points of one trace column.
fn series(run: &Run, column: impl Fn(&TraceRow) -> Option<f64>) -> Curve {
    run.trace
        .rows
        .iter()
        .filter_map(|r| column(r).map(|v| (r.traversals as f64, v)))
        .collect()
}

/// True when, between every pair of points at least a decade apart, the value
/// falls by less than 10% per decade.
fn flat(points: &[(f64, f64)]) -> bool {
    points.iter().enumerate().all(|(i, &(t1, v1))| {
        points[i..]
            .iter()
            .filter(|(t2, _)| *t2 >= 10.0 * t1)
            .all(|&(t2, v2)| v2 >= v1 * 0.9f64.powf((t2 / t1).log10()))
    })
}

/// Index of the first point from which the rest of the curve is flat.
fn plateau_onset(points: &[(f64, f64)]) -> usize {
    let mut onset = points.len();
    while onset > 0 && flat(&points[onset - 1..]) {
        onset -= 1;
    }
    onset
}

pub fn nash_gap_shape() -> Outcome {
    let base = run(Some(0.0), true)?;
    let reference = series(&base, |r| Some(r.nash_gap));
    let mut secs = base.secs;
    let mut detail = Vec::new();
    for xi in [0.01, 0.005] {
        let r = run(Some(xi), xi == 0.01)?;
        secs += r.secs;
        let curve = series(&r, |r| Some(r.nash_gap));
        ensure(
            curve.iter().map(|p| p.0).eq(reference.iter().map(|p| p.0)),
            || format!("xi={xi}: trace points differ from the unperturbed run"),
        )?;
        let onset = plateau_onset(&curve);
        let (t_onset, level) = curve
            .get(onset)
            .copied()
            .ok_or(format!("xi={xi}: no plateau"))?;
        ensure(t_onset * 10.0 <= BUDGET as f64, || {
            format!("xi={xi}: plateau starts at {t_onset} traversals, less than a decade before the end")
        })?;
        let mut worst: f64 = 1.0;
        for (&(t, g), &(_, g0)) in curve[..=onset].iter().zip(&reference) {
            let ratio = g / g0;
            ensure((1.0 / 3.0..=3.0).contains(&ratio), || {
                format!("xi={xi}: gap {g:e} vs unperturbed {g0:e} at {t} traversals")
            })?;
            worst = worst.max(ratio.max(1.0 / ratio));
        }
        let final_gap = curve.last().unwrap().1;
        let base_final = reference.last().unwrap().1;
        ensure(final_gap > 10.0 * base_final, || {
            format!("xi={xi}: final gap {final_gap:e} not above the unperturbed {base_final:e}")
        })?;
        detail.push(format!(
            "xi={xi} plateau from {t_onset} traversals at {level:.2e} (final {final_gap:.2e}), worst ratio before {worst:.2}"
        ));
    }
    ensure(secs < 600.0, || format!("runs took {secs:.0}s, limit 600s"))?;
    Ok(format!(
        "budget {BUDGET}, gamma {}, unperturbed final {:.2e}; {}; runs {secs:.0}s",
        setup()?.gamma,
        reference.last().unwrap().1,
        detail.join("; ")
    ))
}

pub fn regret_shape() -> Outcome {
    let regret = |run: &Run| series(run, |r| r.max_infoset_regret);
    let last = |xi: Option<f64>| -> Result<(f64, f64, Curve), String> {
        let r = run(xi, true)?;
        let s = regret(&r);
        let &(t, v) = s.last().ok_or("empty trace")?;
        Ok((t, v, s))
    };
    let (t, small, _) = last(Some(0.01))?;
    let (t_cfr, cfr, _) = last(None)?;
    let (t_zero, zero, _) = last(Some(0.0))?;
    let (t_big, big, big_curve) = last(Some(0.1))?;
    ensure([t_cfr, t_zero, t_big].iter().all(|&u| u == t), || {
        format!("final traversals differ: {t} {t_cfr} {t_zero} {t_big}")
    })?;
    ensure(cfr >= 10.0 * small && zero >= 10.0 * small, || {
        format!("xi=0.01 regret {small:.3e} vs cfr+ {cfr:.3e} and xi=0 {zero:.3e}")
    })?;
    let tail: Vec<(f64, f64)> = big_curve
        .iter()
        .copied()
        .filter(|p| p.0 * 10.0 >= t)
        .collect();
    ensure(
        tail.iter().all(|p| (p.1 / tail[0].1 - 1.0).abs() < 0.1),
        || "xi=0.1 regret moves by 10% or more over the last decade".to_string(),
    )?;
    ensure(big > small, || {
        format!("xi=0.1 plateau {big:.3e} not above xi=0.01 {small:.3e}")
    })?;
    Ok(format!(
        "at {t} traversals: xi=0.01 {small:.3e}, cfr+ {cfr:.3e} ({:.1}x), xi=0 {zero:.3e} ({:.1}x), xi=0.1 plateau {big:.3e}",
        cfr / small,
        zero / small
    ))
}
