//! Experiment configuration, weight-scale tuning, and CSV trace output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cfr::cfr_run;
use crate::egt::{egt_run, Egt, Modulus, RunOptions};
use crate::error::{Error, Result};
use crate::game::{game_by_name, GameTree, SequenceFormProblem};
use crate::smoothing::{DgfWeights, WeightScheme};
use crate::trace::{Budget, Cadence, SolverTrace};
use crate::treeplex::Perturbation;

/// Weight scales tried by [`tune_weight_scale`], largest first.
pub const GAMMA_CANDIDATES: [f64; 5] = [1.0, 0.1, 0.05, 0.01, 0.005];

/// EGT iterations each tuning candidate runs.
pub const TUNING_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Egt,
    CfrPlus,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Egt => "egt",
            Algorithm::CfrPlus => "cfr+",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "egt" => Ok(Algorithm::Egt),
            "cfr+" | "cfrplus" => Ok(Algorithm::CfrPlus),
            _ => Err(Error::Config(format!(
                "unknown algorithm {s:?} (expected egt or cfr+)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub game: String,
    pub algo: Algorithm,
    pub xi: f64,
    pub scheme: WeightScheme,
    /// `None` tunes the scale before running.
    pub gamma: Option<f64>,
    /// Traversal budget.
    pub budget: u64,
    /// Growth factor of the traversal count between trace points.
    pub cadence: f64,
    pub modulus: Modulus,
    /// Whether trace rows include the largest per-infoset regret.
    pub infoset_regret: bool,
    /// CSV destination; `None` writes to stdout.
    pub out: Option<PathBuf>,
    /// Recorded in the CSV header. Every solver here is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            game: "kuhn".into(),
            algo: Algorithm::Egt,
            xi: 0.0,
            scheme: WeightScheme::Convergence,
            gamma: None,
            budget: 10_000,
            cadence: 1.25,
            modulus: Modulus::default(),
            infoset_regret: true,
            out: None,
            seed: 0,
        }
    }
}

/// Config file contents; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub game: Option<String>,
    pub algo: Option<String>,
    pub xi: Option<f64>,
    pub scheme: Option<String>,
    /// A number, or the string `"auto"`.
    pub gamma: Option<toml::Value>,
    pub budget: Option<u64>,
    pub cadence: Option<f64>,
    pub modulus: Option<String>,
    pub infoset_regret: Option<bool>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ConfigFile::parse(&text)
    }

    /// Overlays the keys present in the file onto `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(g) = &self.game {
            cfg.game = g.clone();
        }
        if let Some(a) = &self.algo {
            cfg.algo = a.parse()?;
        }
        if let Some(xi) = self.xi {
            cfg.xi = xi;
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = s.parse()?;
        }
        if let Some(g) = &self.gamma {
            cfg.gamma = match g {
                toml::Value::String(s) => parse_gamma(s)?,
                toml::Value::Float(f) => Some(*f),
                toml::Value::Integer(i) => Some(*i as f64),
                other => {
                    return Err(Error::Config(format!(
                        "gamma must be a number or \"auto\", got {other}"
                    )))
                }
            };
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(c) = self.cadence {
            cfg.cadence = c;
        }
        if let Some(m) = &self.modulus {
            cfg.modulus = m.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(r) = self.infoset_regret {
            cfg.infoset_regret = r;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(())
    }
}

/// Parses a weight scale: a positive number, or `auto` for tuning.
pub fn parse_gamma(s: &str) -> Result<Option<f64>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Config(format!("gamma must be a number or \"auto\", got {s:?}")))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::Config("budget must be at least 1 traversal".into()));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::Config(format!(
                "xi must be a finite number >= 0, got {}",
                self.xi
            )));
        }
        if self.algo == Algorithm::CfrPlus && self.xi != 0.0 {
            return Err(Error::Config(format!(
                "cfr+ runs on the unperturbed game only, got xi = {}",
                self.xi
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.cadence > 1.0 && self.cadence.is_finite()) {
            return Err(Error::Config(format!(
                "cadence must exceed 1, got {}",
                self.cadence
            )));
        }
        Ok(())
    }
}

/// Nash gap after the tuning iterations for one candidate scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningResult {
    pub gamma: f64,
    /// `None` when the excessive gap condition failed during the tuning run.
    pub gap: Option<f64>,
}

/// Picks the weight scale whose ξ = 0 EGT run has the smallest Nash gap
/// after [`TUNING_ITERATIONS`] steps; ties go to the larger scale.
///
/// Candidates that break the excessive gap condition are skipped.
pub fn tune_weight_scale(
    p: &SequenceFormProblem,
    scheme: WeightScheme,
    modulus: Modulus,
) -> Result<(f64, Vec<TuningResult>)> {
    let mut results = Vec::with_capacity(GAMMA_CANDIDATES.len());
    let mut best: Option<(f64, f64)> = None;
    for gamma in GAMMA_CANDIDATES {
        let wx = DgfWeights::compute(p.x(), scheme).with_gamma(gamma)?;
        let wy = DgfWeights::compute(p.y(), scheme).with_gamma(gamma)?;
        let mut egt = Egt::new(p, wx, wy, Perturbation::NONE)?.with_modulus(modulus);
        let mut gap = None;
        let (mut state, mut ok) = match egt.init() {
            Ok(s) => (s, true),
            Err(Error::Invariant(_)) => (egt.clone().unchecked().init()?, false),
            Err(e) => return Err(e),
        };
        while ok && state.k < TUNING_ITERATIONS {
            match egt.step(&mut state) {
                Ok(()) => {}
                Err(Error::Invariant(_)) => ok = false,
                Err(e) => return Err(e),
            }
        }
        if ok {
            let g = egt.saddle_gap(&state, Perturbation::NONE)?;
            gap = Some(g);
            if best.is_none_or(|(_, b)| g < b) {
                best = Some((gamma, g));
            }
        }
        results.push(TuningResult { gamma, gap });
    }
    match best {
        Some((gamma, _)) => Ok((gamma, results)),
        None => Err(Error::Invariant(
            "every candidate weight scale broke the excessive gap condition".into(),
        )),
    }
}

/// A finished run: its trace, the scale used, and the header metadata.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: SolverTrace,
    pub gamma: Option<f64>,
    pub metadata: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.trace.write_csv(out, &self.metadata)
    }
}

/// Runs one configuration without writing anything.
pub fn run_config(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let game = game_by_name(&cfg.game)?;
    run_on_game(cfg, &game)
}

/// Like [`run_config`] but with an already built game.
pub fn run_on_game(cfg: &RunConfig, game: &GameTree) -> Result<RunOutcome> {
    cfg.validate()?;
    let cadence = Cadence::Geometric(cfg.cadence);
    let budget = Budget::Traversals(cfg.budget);
    let (trace, gamma) = match cfg.algo {
        Algorithm::CfrPlus => (cfr_run(game, budget, cadence, cfg.infoset_regret)?.1, None),
        Algorithm::Egt => {
            let p = SequenceFormProblem::from_game(game);
            let xi = Perturbation::new(cfg.xi)?;
            let gamma = match cfg.gamma {
                Some(g) => g,
                None => tune_weight_scale(&p, cfg.scheme, cfg.modulus)?.0,
            };
            let wx = DgfWeights::compute(p.x(), cfg.scheme).with_gamma(gamma)?;
            let wy = DgfWeights::compute(p.y(), cfg.scheme).with_gamma(gamma)?;
            let opts = RunOptions {
                game: cfg.infoset_regret.then_some(game),
                cadence,
                modulus: cfg.modulus,
            };
            (egt_run(&p, wx, wy, xi, budget, opts)?.1, Some(gamma))
        }
    };
    let na = || "n/a".to_string();
    let mut metadata = vec![
        ("game".to_string(), game.name().to_string()),
        ("algo".to_string(), cfg.algo.name().to_string()),
        ("xi".to_string(), cfg.xi.to_string()),
        (
            "gamma".to_string(),
            gamma.map_or_else(na, |g| g.to_string()),
        ),
        (
            "scheme".to_string(),
            if gamma.is_some() {
                cfg.scheme.name().to_string()
            } else {
                na()
            },
        ),
    ];
    if cfg.algo == Algorithm::Egt {
        metadata.push(("modulus".to_string(), cfg.modulus.name().to_string()));
    }
    metadata.push(("budget".to_string(), cfg.budget.to_string()));
    metadata.push(("seed".to_string(), cfg.seed.to_string()));
    Ok(RunOutcome {
        trace,
        gamma,
        metadata,
    })
}

/// Runs `cfg` and writes its CSV to `cfg.out`, or stdout when unset.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome> {
    let outcome = run_config(cfg)?;
    match &cfg.out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            outcome.write_csv(&mut w)?;
            w.flush()?;
        }
        None => outcome.write_csv(std::io::stdout().lock())?,
    }
    Ok(outcome)
}
