//! Stability and sanity property suite over randomly generated small
//! instances: exhaustive-ledger checks (local potential maxima are pairwise
//! stable, collision-free welfare maxima are pairwise stable), strict
//! potential increase along greedy swaps, and the learning-layer limits.
//! Backs the `verify` CLI subcommand; the acceptance tests drive the same
//! generators at larger budgets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_deployment, LinkGains};
use crate::config::{DesirabilityKind, PowerMode, SimConfig};
use crate::learning::{q_update, softmax_probs, AgentStep, QTable};
use crate::matching::{enumerate_optimal, greedy_swap, Game, GameContext, Matching};
use crate::power::PowerPolicy;
use crate::rng::{derive_seed, rng_from};

/// A randomly drawn enumeration-sized instance: at most 6 children over at
/// most 4 RBs of capacity at most 2, evaluated under the count-analytic
/// desirability model (the regime where the potential arguments are exact).
pub fn random_small_instance(rng: &mut ChaCha8Rng) -> SimConfig {
    loop {
        let k = rng.gen_range(1..=3usize);
        let quota: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
        let total: usize = quota.iter().sum();
        if total > 6 {
            continue;
        }
        let l = rng.gen_range(2..=4usize);
        let caps: Vec<usize> = (0..l).map(|_| rng.gen_range(1..=2)).collect();
        if caps.iter().sum::<usize>() < total {
            continue;
        }
        let mut cfg = SimConfig::default();
        cfg.num_ops = k;
        cfg.sbs_per_op = rng.gen_range(1..=2);
        cfg.rb_quota = quota;
        cfg.op_weights = vec![1.0; k];
        cfg.num_rbs = l;
        cfg.rb_capacity = caps;
        cfg.desirability = DesirabilityKind::CountAnalytic;
        cfg.power_mode = if rng.gen_bool(0.5) {
            PowerMode::Uniform
        } else {
            PowerMode::Full
        };
        cfg.validate().expect("generated instance is feasible");
        return cfg;
    }
}

/// Like [`random_small_instance`] but with single-child operators (so every
/// matching is collision-free) and optionally non-unit welfare weights.
pub fn random_collision_free_instance(rng: &mut ChaCha8Rng) -> SimConfig {
    loop {
        let k = rng.gen_range(2..=4usize);
        let l = rng.gen_range(2..=4usize);
        let caps: Vec<usize> = (0..l).map(|_| rng.gen_range(1..=2)).collect();
        if caps.iter().sum::<usize>() < k {
            continue;
        }
        let mut cfg = SimConfig::default();
        cfg.num_ops = k;
        cfg.sbs_per_op = rng.gen_range(1..=2);
        cfg.rb_quota = vec![1; k];
        cfg.op_weights = (0..k)
            .map(|_| [0.5, 1.0, 2.0][rng.gen_range(0..3)])
            .collect();
        cfg.num_rbs = l;
        cfg.rb_capacity = caps;
        cfg.desirability = DesirabilityKind::CountAnalytic;
        cfg.power_mode = if rng.gen_bool(0.5) {
            PowerMode::Uniform
        } else {
            PowerMode::Full
        };
        cfg.validate().expect("generated instance is feasible");
        return cfg;
    }
}

pub struct InstanceWorld {
    pub cfg: SimConfig,
    pub dep: crate::channel::Deployment,
    pub gains: LinkGains,
    pub eval_seed: u64,
}

impl InstanceWorld {
    pub fn sample(cfg: SimConfig, seed: u64) -> InstanceWorld {
        let dep =
            sample_deployment(&cfg, &mut rng_from(derive_seed(seed, 0))).expect("valid instance");
        let gains = LinkGains::new(&dep, &cfg);
        InstanceWorld {
            cfg,
            dep,
            gains,
            eval_seed: derive_seed(seed, 3),
        }
    }

    pub fn ctx(&self) -> GameContext<'_> {
        let policy =
            PowerPolicy::initial(self.cfg.power_mode, self.dep.num_sbs(), &self.cfg.radio());
        GameContext::new(&self.cfg, &self.dep, &self.gains, policy, self.eval_seed)
    }
}

/// Every local maximum of the potential in the exhaustive ledger is
/// pairwise stable. Returns (counterexamples, local maxima seen).
pub fn check_theorem1(instances: usize, master_seed: u64) -> (usize, usize) {
    let mut gen_rng = rng_from(master_seed);
    let mut counterexamples = 0;
    let mut maxima = 0;
    for i in 0..instances {
        let cfg = random_small_instance(&mut gen_rng);
        let world = InstanceWorld::sample(cfg, derive_seed(master_seed, 1000 + i as u64));
        let ctx = world.ctx();
        let mut game = Game::new(&ctx);
        let (_, ledger) = enumerate_optimal(&mut game).expect("instance within enumeration bounds");
        for e in &ledger.entries {
            if e.local_max_potential {
                maxima += 1;
                if !e.pairwise_stable {
                    counterexamples += 1;
                }
            }
        }
    }
    (counterexamples, maxima)
}

/// On collision-free instances, every local maximum of the welfare is
/// pairwise stable. Returns (counterexamples, local maxima seen).
pub fn check_corollary1(instances: usize, master_seed: u64) -> (usize, usize) {
    let mut gen_rng = rng_from(master_seed);
    let mut counterexamples = 0;
    let mut maxima = 0;
    for i in 0..instances {
        let cfg = random_collision_free_instance(&mut gen_rng);
        let world = InstanceWorld::sample(cfg, derive_seed(master_seed, 2000 + i as u64));
        let ctx = world.ctx();
        let mut game = Game::new(&ctx);
        let (_, ledger) = enumerate_optimal(&mut game).expect("instance within enumeration bounds");
        for e in &ledger.entries {
            assert!(e.collision_free, "single-child instances cannot collide");
            if e.local_max_welfare {
                maxima += 1;
                if !e.pairwise_stable {
                    counterexamples += 1;
                }
            }
        }
    }
    (counterexamples, maxima)
}

/// Run greedy passes over random instances until at least `target_swaps`
/// approved swaps have been applied; every applied swap must strictly
/// increase the potential. Returns (violations, swaps checked).
pub fn check_lemma2(target_swaps: usize, master_seed: u64) -> (usize, usize) {
    let mut gen_rng = rng_from(master_seed);
    let mut violations = 0;
    let mut swaps = 0;
    let mut i = 0u64;
    while swaps < target_swaps {
        let cfg = random_small_instance(&mut gen_rng);
        let world = InstanceWorld::sample(cfg, derive_seed(master_seed, 3000 + i));
        i += 1;
        let ctx = world.ctx();
        let mut game = Game::new(&ctx);
        let m = Matching::random_feasible(
            ctx.num_children(),
            &world.cfg.rb_capacity,
            &mut rng_from(derive_seed(master_seed, 4000 + i)),
        )
        .expect("feasible");
        let state = game.build_state(m);
        let out = greedy_swap(
            &mut game,
            state,
            &mut rng_from(derive_seed(master_seed, 5000 + i)),
            1000,
        );
        for w in out.potential_trace.windows(2) {
            swaps += 1;
            if w[1].1 <= w[0].1 {
                violations += 1;
            }
        }
    }
    (violations, swaps)
}

/// Softmax sanity: probabilities sum to one, equal values give the uniform
/// distribution, the sharp-temperature limit concentrates on the argmax.
pub fn check_softmax_limits() -> bool {
    let n = 10;
    let equal = softmax_probs(&vec![1.23; n], 0.7);
    let sum: f64 = equal.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return false;
    }
    if equal.iter().any(|p| (p - 1.0 / n as f64).abs() > 1e-6) {
        return false;
    }
    let mut q = vec![0.0; n];
    q[4] = 1.0;
    let sharp = softmax_probs(&q, 1e-4);
    sharp[4] > 1.0 - 1e-6
}

/// Bandit-mode convergence: with a single state, zero discount and i.i.d.
/// rewards, the Q-value settles onto the mean reward.
pub fn check_bandit_convergence(steps: usize, lr: f64, tol: f64) -> bool {
    let mut qt = QTable::new(1);
    let mut rng = rng_from(424242);
    let mut sum = 0.0;
    for _ in 0..steps {
        let r = 1.5 + rng.gen::<f64>(); // mean 2.0
        sum += r;
        q_update(
            &mut qt,
            &AgentStep {
                state: 0,
                action: 1,
                reward: r,
                next_state: 0,
            },
            lr,
            0.0,
        );
    }
    let empirical_mean = sum / steps as f64;
    (qt.value(0, 1) - empirical_mean).abs() / empirical_mean < tol
}

#[derive(Debug, Clone)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The quick verification suite behind the `verify` CLI subcommand.
pub fn run_verify(seed: u64) -> Vec<VerifyCheck> {
    let mut checks = Vec::new();

    let (cex, maxima) = check_theorem1(12, seed);
    checks.push(VerifyCheck {
        name: "theorem1",
        passed: cex == 0 && maxima > 0,
        detail: format!("{maxima} local potential maxima, {cex} unstable"),
    });

    let (violations, swaps) = check_lemma2(1000, seed ^ 0x5eed);
    checks.push(VerifyCheck {
        name: "lemma2",
        passed: violations == 0 && swaps >= 1000,
        detail: format!("{swaps} approved swaps, {violations} potential decreases"),
    });

    let (cex_c, maxima_c) = check_corollary1(12, seed ^ 0xc0de);
    checks.push(VerifyCheck {
        name: "corollary1",
        passed: cex_c == 0 && maxima_c > 0,
        detail: format!("{maxima_c} local welfare maxima, {cex_c} unstable"),
    });

    checks.push(VerifyCheck {
        name: "softmax_limits",
        passed: check_softmax_limits(),
        detail: "uniform at equal values, argmax at sharp temperature".into(),
    });

    checks.push(VerifyCheck {
        name: "bandit_convergence",
        passed: check_bandit_convergence(10_000, 0.01, 0.02),
        detail: "Q tracks the mean reward within 2%".into(),
    });

    checks
}
