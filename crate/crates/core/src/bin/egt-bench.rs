use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use perturbed_egt::bench::{parse_gamma, run_experiment, tune_weight_scale, ConfigFile, RunConfig};
use perturbed_egt::game::{game_by_name, SequenceFormProblem, REGISTERED_GAMES};
use perturbed_egt::Result;

/// Convergence traces for EGT over perturbed treeplexes and the CFR+ baseline
#[derive(Parser, Debug)]
#[command(name = "egt-bench", version, about)]
struct Args {
    /// TOML file with run settings; flags override its keys
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Game name (kuhn, leduc3, leduc5, matching_pennies, figure1)
    #[arg(long)]
    game: Option<String>,

    /// Solver: egt or cfr+
    #[arg(long)]
    algo: Option<String>,

    /// Minimum probability of every action (0 for the unperturbed game)
    #[arg(long)]
    xi: Option<f64>,

    /// Entropy weight scheme: convergence or recurrence
    #[arg(long)]
    scheme: Option<String>,

    /// Global weight scale, or "auto" to tune it
    #[arg(long)]
    gamma: Option<String>,

    /// Tree traversal budget
    #[arg(long)]
    budget: Option<u64>,

    /// Traversal growth factor between trace points
    #[arg(long)]
    cadence: Option<f64>,

    /// Strong convexity norm used for the initial smoothing: l2 or l1
    #[arg(long)]
    modulus: Option<String>,

    /// Skip the per-infoset regret column (faster on large games)
    #[arg(long)]
    no_infoset_regret: bool,

    /// CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed recorded in the CSV header
    #[arg(long)]
    seed: Option<u64>,

    /// Print the weight-scale tuning table and exit
    #[arg(long)]
    tune: bool,

    /// List the registered games and exit
    #[arg(long)]
    list_games: bool,
}

fn config(args: &Args) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        ConfigFile::load(path)?.apply(&mut cfg)?;
    }
    if let Some(g) = &args.game {
        cfg.game = g.clone();
    }
    if let Some(a) = &args.algo {
        cfg.algo = a.parse()?;
    }
    if let Some(xi) = args.xi {
        cfg.xi = xi;
    }
    if let Some(s) = &args.scheme {
        cfg.scheme = s.parse()?;
    }
    if let Some(g) = &args.gamma {
        cfg.gamma = parse_gamma(g)?;
    }
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(c) = args.cadence {
        cfg.cadence = c;
    }
    if let Some(m) = &args.modulus {
        cfg.modulus = m.parse()?;
    }
    if args.no_infoset_regret {
        cfg.infoset_regret = false;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: Args) -> Result<()> {
    if args.list_games {
        for g in REGISTERED_GAMES {
            println!("{g}");
        }
        return Ok(());
    }
    let cfg = config(&args)?;
    if args.tune {
        let p = SequenceFormProblem::from_game(&game_by_name(&cfg.game)?);
        let (gamma, results) = tune_weight_scale(&p, cfg.scheme, cfg.modulus)?;
        println!("gamma,nash_gap");
        for r in results {
            let gap = r
                .gap
                .map_or_else(|| "violated".to_string(), |g| format!("{g:e}"));
            println!("{},{gap}", r.gamma);
        }
        println!("# selected gamma={gamma}");
        return Ok(());
    }
    let outcome = run_experiment(&cfg)?;
    if let (Some(path), Some(last)) = (&cfg.out, outcome.trace.last()) {
        eprintln!(
            "wrote {} rows to {} (final nash_gap {:e})",
            outcome.trace.rows.len(),
            path.display(),
            last.nash_gap
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("egt-bench: {e}");
            ExitCode::FAILURE
        }
    }
}
