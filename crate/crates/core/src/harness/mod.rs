//! Experiment orchestration: the matching <-> learning outer loop per
//! sample, seeded Monte Carlo over deployments with worker-pool execution,
//! aggregation into CDFs, and result persistence.

mod cli;
mod emit;
pub mod verify;

pub use cli::cli_main;
pub use emit::emit_results;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::channel::{sample_deployment, LinkGains};
use crate::config::{PowerMode, SimConfig, SolverKind};
use crate::error::{Error, Result};
use crate::learning::train_operator;
use crate::matching::{greedy_swap, mcmc, Game, GameContext, Matching};
use crate::power::PowerPolicy;
use crate::rng::{derive_seed, rng_from};

/// Relative welfare change below which the outer matching/learning loop is
/// considered converged, and the hard cap on outer rounds.
pub const OUTER_CONVERGENCE_REL: f64 = 1e-4;
pub const OUTER_ROUND_CAP: usize = 20;

/// Welfare history of one Monte Carlo sample. `per_iteration_s` holds
/// (proposal index, welfare) change points: greedy logs the welfare after
/// each applied swap, MCMC logs the best-seen welfare when it improves.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareTrace {
    pub sample_id: usize,
    pub seed: u64,
    pub per_iteration_s: Vec<(usize, f64)>,
    pub final_s: f64,
    pub swaps_applied: usize,
    pub proposals: usize,
    pub rounds: usize,
}

/// Aggregated experiment output.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub samples: Vec<WelfareTrace>,
    /// (welfare, cumulative probability), sorted ascending.
    pub cdf: Vec<(f64, f64)>,
    pub mean_welfare: f64,
    /// Mean welfare divided by the operator count.
    pub per_op_welfare: f64,
    pub num_ops: usize,
}

/// Run one sample: sample a deployment, build a random feasible matching,
/// then alternate solver passes with per-operator Q-learning (power modes
/// without learning stop after the first pass) until the welfare settles
/// or the round cap is hit.
pub fn run_sample(cfg: &SimConfig, sample_id: usize, sample_seed: u64) -> Result<WelfareTrace> {
    cfg.validate()?;
    let dep_seed = derive_seed(sample_seed, 0);
    let game_seed = derive_seed(sample_seed, 1);
    let learn_seed = derive_seed(sample_seed, 2);
    let eval_seed = derive_seed(sample_seed, 3);

    let dep = sample_deployment(cfg, &mut rng_from(dep_seed))?;
    let gains = LinkGains::new(&dep, cfg);
    let radio = cfg.radio();
    let mut policy = PowerPolicy::initial(cfg.power_mode, dep.num_sbs(), &radio);
    let mut game_rng = rng_from(game_seed);
    let mut learn_rng = rng_from(learn_seed);

    let mut matching =
        Matching::random_feasible(cfg.total_quota(), &cfg.rb_capacity, &mut game_rng)?;
    let max_iter = cfg.effective_max_iterations();

    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut proposals_total = 0usize;
    let mut swaps_total = 0usize;
    let mut prev_s: Option<f64> = None;
    let mut rounds = 0usize;
    let final_s;

    loop {
        rounds += 1;
        let ctx = GameContext::new(cfg, &dep, &gains, policy.clone(), eval_seed);
        let mut game = Game::new(&ctx);
        let state0 = game.build_state(matching);
        let out = match cfg.solver {
            SolverKind::Greedy => greedy_swap(&mut game, state0, &mut game_rng, max_iter),
            SolverKind::Mcmc => mcmc(&mut game, state0, &mut game_rng, max_iter, cfg.temp_tb),
        };
        // each round contributes its change points; the round-opening entry
        // records the welfare re-evaluation under the refreshed policy
        for &(it, s) in &out.trace {
            trace.push((proposals_total + it, s));
        }
        proposals_total += out.proposals;
        swaps_total += out.swaps_applied;
        let round_s = out.state.welfare(&ctx);
        matching = out.state.matching;

        if cfg.power_mode != PowerMode::QLearning {
            final_s = round_s;
            break;
        }
        if let Some(p) = prev_s {
            if (round_s - p).abs() <= OUTER_CONVERGENCE_REL * p.abs().max(f64::MIN_POSITIVE) {
                final_s = round_s;
                break;
            }
        }
        if rounds >= OUTER_ROUND_CAP {
            final_s = round_s;
            break;
        }
        prev_s = Some(round_s);

        let mut pmfs = policy.pmf.clone();
        for parent in 0..cfg.num_ops {
            let outcome = train_operator(
                &dep,
                &gains,
                &matching,
                parent,
                cfg,
                &radio,
                &policy,
                &mut learn_rng,
            )?;
            for (i, &f) in outcome.sbs.iter().enumerate() {
                pmfs[f] = outcome.pmf[i].clone();
            }
        }
        policy = PowerPolicy::from_pmfs(pmfs, &radio);
    }

    // trace always has at least the initial welfare entry
    debug_assert_eq!(trace.last().map(|&(_, s)| s), Some(final_s));
    Ok(WelfareTrace {
        sample_id,
        seed: sample_seed,
        per_iteration_s: trace,
        final_s,
        swaps_applied: swaps_total,
        proposals: proposals_total,
        rounds,
    })
}

/// Number of worker threads: the SPECTRUM_SIM_WORKERS environment variable
/// wins, then `cfg.workers`, then the machine's parallelism.
pub fn resolve_workers(cfg: &SimConfig) -> usize {
    let requested = std::env::var("SPECTRUM_SIM_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(cfg.workers);
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    }
}

/// Run `cfg.samples` independent samples with per-sample seeds derived from
/// the master seed, in parallel, and aggregate. The reduction is ordered by
/// sample index, so the output is identical for any worker count.
pub fn run_experiment(cfg: &SimConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let n = cfg.samples;
    let workers = resolve_workers(cfg).min(n).max(1);
    let results: Mutex<Vec<Option<Result<WelfareTrace>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let seed = derive_seed(cfg.seed, i as u64);
                let r = run_sample(cfg, i, seed);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });

    let mut samples = Vec::with_capacity(n);
    for (i, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        match slot.expect("worker filled every slot") {
            Ok(t) => samples.push(t),
            Err(e) => {
                return Err(Error::Sample {
                    sample: i,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(aggregate(cfg, samples))
}

fn aggregate(cfg: &SimConfig, samples: Vec<WelfareTrace>) -> ExperimentResult {
    let n = samples.len();
    let mut sorted: Vec<f64> = samples.iter().map(|t| t.final_s).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite welfare"));
    let cdf: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, (i + 1) as f64 / n as f64))
        .collect();
    let mean_welfare = sorted.iter().sum::<f64>() / n as f64;
    ExperimentResult {
        samples,
        cdf,
        mean_welfare,
        per_op_welfare: mean_welfare / cfg.num_ops as f64,
        num_ops: cfg.num_ops,
    }
}

/// Empirical quantile of the per-sample welfare values (q in [0, 1]).
pub fn welfare_quantile(res: &ExperimentResult, q: f64) -> f64 {
    if res.cdf.is_empty() {
        return f64::NAN;
    }
    let idx = ((res.cdf.len() as f64 - 1.0) * q).round() as usize;
    res.cdf[idx].0
}
