//! Per-SBS Q-learning for transmit power selection. Each SBS of an operator
//! is an agent with a binary state (QoS violated on the last slot or not)
//! and one action per power level; rewards are the QoS-gated rates under
//! the joint interference produced by all agents playing simultaneously.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{Deployment, LinkGains};
use crate::config::{RadioParams, SimConfig};
use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::power::PowerPolicy;
use crate::rates::gated_rate;
use crate::rng::exp1;

pub const NUM_STATES: usize = 2;

/// State x action table of discounted-rate estimates for one SBS.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    q: Vec<Vec<f64>>,
    visits: Vec<Vec<u32>>,
}

impl QTable {
    pub fn new(num_actions: usize) -> QTable {
        assert!(num_actions >= 1);
        QTable {
            q: vec![vec![0.0; num_actions]; NUM_STATES],
            visits: vec![vec![0; num_actions]; NUM_STATES],
        }
    }

    pub fn num_actions(&self) -> usize {
        self.q[0].len()
    }

    /// Q(s, n) with the 1-based action index n.
    pub fn value(&self, state: usize, action: usize) -> f64 {
        self.q[state][action - 1]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.q[state]
    }

    pub fn visits(&self, state: usize, action: usize) -> u32 {
        self.visits[state][action - 1]
    }

    /// Greedy readout: the highest-value action in `state` (lowest index on
    /// ties).
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = &self.q[state];
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        best + 1
    }
}

/// One agent transition: state, chosen power level, gated-rate reward and
/// successor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentStep {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Binary QoS state: 1 when the SINR violates the threshold, else 0.
pub fn observe_state(
    f: usize,
    l: usize,
    powers: &[f64],
    occupancy: &[Vec<usize>],
    ch: &crate::channel::ChannelDraw,
    radio: &RadioParams,
) -> usize {
    let s = crate::channel::sinr(f, l, powers, occupancy, ch, radio);
    usize::from(s < radio.sinr_th)
}

/// Reward: the instantaneous rate when the QoS threshold is met, else zero.
pub fn reward(sinr_value: f64, radio: &RadioParams) -> f64 {
    gated_rate(sinr_value, radio.sinr_th)
}

/// Softmax probabilities over the actions of one state row, stabilized by
/// max subtraction.
pub fn softmax_probs(q_row: &[f64], temp: f64) -> Vec<f64> {
    assert!(temp > 0.0, "softmax temperature must be positive");
    let max = q_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = q_row.iter().map(|q| ((q - max) / temp).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Boltzmann exploration: sample an action (1-based power level) with
/// probability proportional to exp(Q(s, a)/T_p).
pub fn select_action(qt: &QTable, state: usize, temp: f64, rng: &mut impl Rng) -> usize {
    let probs = softmax_probs(qt.row(state), temp);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i + 1;
        }
    }
    probs.len()
}

/// Temporal-difference update with greedy bootstrap: touches exactly the
/// (state, action) cell of the step.
pub fn q_update(qt: &mut QTable, step: &AgentStep, lr: f64, gamma: f64) {
    assert!(lr > 0.0 && lr <= 1.0, "learning rate must be in (0, 1]");
    assert!((0.0..1.0).contains(&gamma), "discount must be in [0, 1)");
    let best_next = qt.q[step.next_state]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let cell = &mut qt.q[step.state][step.action - 1];
    *cell = (1.0 - lr) * *cell + lr * (step.reward + gamma * best_next);
    qt.visits[step.state][step.action - 1] += 1;
}

/// Outcome of training one operator's SBSs.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// One Q-table per SBS of the operator, in `sbs` order.
    pub tables: Vec<QTable>,
    /// The operator's SBS ids.
    pub sbs: Vec<usize>,
    /// Empirical power-level PMF per SBS (selected-action frequencies).
    pub pmf: Vec<Vec<f64>>,
    /// Mean reward across the operator's SBSs, one entry per episode.
    pub reward_trace: Vec<f64>,
}

/// Train the SBSs of `parent` for `cfg.episodes` slots. Every SBS in the
/// network re-draws one RB from its operator's held set each slot;
/// externals transmit at powers drawn from `policy`, the trainee's agents
/// pick levels by Boltzmann exploration and update their tables on the
/// jointly produced rewards.
pub fn train_operator(
    dep: &Deployment,
    gains: &LinkGains,
    matching: &Matching,
    parent: usize,
    cfg: &SimConfig,
    radio: &RadioParams,
    policy: &PowerPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    let quota_children: Vec<usize> = (0..cfg.num_ops)
        .map(|p| {
            let offset: usize = cfg.rb_quota[..p].iter().sum();
            offset
        })
        .collect();
    // held RB set per operator
    let held: Vec<Vec<usize>> = (0..cfg.num_ops)
        .map(|p| {
            let kids: Vec<usize> =
                (quota_children[p]..quota_children[p] + cfg.rb_quota[p]).collect();
            matching.rbs_held(&kids)
        })
        .collect();
    if held[parent].is_empty() {
        return Err(Error::infeasible(format!(
            "operator {parent} holds no RBs; nothing to train"
        )));
    }

    let num_levels = radio.power_levels_w.len();
    let own: Vec<usize> = dep.sbs_of_op(parent);
    let mut tables: Vec<QTable> = own.iter().map(|_| QTable::new(num_levels)).collect();
    let mut counts = vec![vec![0u64; num_levels]; own.len()];
    let mut states = vec![0usize; own.len()];
    let mut reward_trace = Vec::with_capacity(cfg.episodes);

    let num_sbs = dep.num_sbs();
    let mut rb_of_sbs = vec![usize::MAX; num_sbs];
    let mut power_of_sbs = vec![0.0f64; num_sbs];
    // the stationary selection PMF is estimated from the post-burn-in half
    // of the episodes, after the early exploration transient
    let pmf_from = cfg.episodes / 2;

    for episode in 0..cfg.episodes {
        // every SBS picks an RB from its operator's held set
        for s in dep.sbs.iter() {
            let set = &held[s.op];
            rb_of_sbs[s.id] = if set.is_empty() {
                usize::MAX
            } else if set.len() == 1 {
                set[0]
            } else {
                set[rng.gen_range(0..set.len())]
            };
        }
        // powers: trainee agents explore, externals follow the policy.
        // The exploration temperature anneals so early slots sample all
        // levels and late slots exploit the learned values.
        let temp = cfg.temp_tp / (1.0 + cfg.temp_decay * episode as f64);
        let mut actions = vec![0usize; own.len()];
        for (i, &f) in own.iter().enumerate() {
            actions[i] = select_action(&tables[i], states[i], temp, rng);
            power_of_sbs[f] = radio.power_levels_w[actions[i] - 1];
        }
        for s in dep.sbs.iter() {
            if s.op != parent && rb_of_sbs[s.id] != usize::MAX {
                power_of_sbs[s.id] = policy.sample_power_w(s.id, rng);
            }
        }
        // joint rewards with fresh fades
        let mut episode_reward = 0.0;
        for (i, &f) in own.iter().enumerate() {
            let rb = rb_of_sbs[f];
            let mut signal = 0.0;
            let mut interference = 0.0;
            for t in 0..num_sbs {
                if rb_of_sbs[t] != rb {
                    continue;
                }
                let rx = gains.gain[t][f] * power_of_sbs[t] * exp1(rng);
                if t == f {
                    signal = rx;
                } else {
                    interference += rx;
                }
            }
            let sinr = signal / (interference + radio.noise_w);
            let u = reward(sinr, radio);
            let next_state = usize::from(sinr < radio.sinr_th);
            let step = AgentStep {
                state: states[i],
                action: actions[i],
                reward: u,
                next_state,
            };
            let visits = tables[i].visits(step.state, step.action);
            let lr = cfg.lr / (1.0 + cfg.lr_decay * visits as f64);
            q_update(&mut tables[i], &step, lr, cfg.gamma);
            if episode >= pmf_from {
                counts[i][actions[i] - 1] += 1;
            }
            states[i] = next_state;
            episode_reward += u;
        }
        reward_trace.push(episode_reward / own.len() as f64);
    }

    let pmf: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![1.0 / num_levels as f64; num_levels]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();

    Ok(TrainOutcome {
        tables,
        sbs: own,
        pmf,
        reward_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_deployment;
    use crate::config::PowerMode;
    use crate::rng::rng_from;

    #[test]
    fn observe_state_threshold_boundary() {
        let cfg = SimConfig::default();
        let radio = cfg.radio();
        // exactly at the threshold satisfies the QoS
        assert_eq!(usize::from(radio.sinr_th < radio.sinr_th), 0);
        assert_eq!(usize::from(radio.sinr_th * 0.999 < radio.sinr_th), 1);
        let dep = sample_deployment(&cfg, &mut rng_from(1)).unwrap();
        let ch = crate::channel::draw_channel(&dep, &cfg, &mut rng_from(2));
        let powers = vec![radio.p_tot_w; dep.num_sbs()];
        let occupancy = vec![vec![0usize]];
        // no interferers at full power: far above the 3 dB threshold
        assert_eq!(observe_state(0, 0, &powers, &occupancy, &ch, &radio), 0);
        // noise-dominated: a transmit power at the noise scale violates QoS
        let weak = vec![radio.noise_w; dep.num_sbs()];
        assert_eq!(observe_state(0, 0, &weak, &occupancy, &ch, &radio), 1);
    }

    #[test]
    fn reward_gates_on_threshold() {
        let cfg = SimConfig::default();
        let radio = cfg.radio();
        let th = radio.sinr_th;
        assert!((reward(th, &radio) - (1.0 + th).log2()).abs() < 1e-12);
        assert_eq!(reward(th * 0.99, &radio), 0.0);
        assert!((reward(3.0, &radio) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_uniform_and_sharp_limits() {
        let equal = softmax_probs(&[0.7; 8], 0.5);
        for p in &equal {
            assert!((p - 0.125).abs() < 1e-12);
        }
        let sum: f64 = equal.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // T -> 0 concentrates on the argmax
        let sharp = softmax_probs(&[0.0, 1.0], 1e-3);
        assert!(sharp[1] > 1.0 - 1e-9);
        // shift invariance
        let a = softmax_probs(&[0.1, 0.4, 0.2], 0.7);
        let b = softmax_probs(&[5.1, 5.4, 5.2], 0.7);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_derived_two_action_case() {
        // Q = (0, ln 2) at T = 1: probabilities (1/3, 2/3)
        let p = softmax_probs(&[0.0, std::f64::consts::LN_2], 1.0);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn select_action_follows_probabilities() {
        let mut qt = QTable::new(2);
        qt.q[0][1] = std::f64::consts::LN_2;
        let mut rng = rng_from(3);
        let n = 60_000;
        let picks_b = (0..n)
            .filter(|_| select_action(&qt, 0, 1.0, &mut rng) == 2)
            .count();
        let frac = picks_b as f64 / n as f64;
        assert!((frac - 2.0 / 3.0).abs() < 0.01, "frac {frac}");
    }

    #[test]
    fn q_update_touches_one_cell() {
        let mut qt = QTable::new(4);
        let step = AgentStep {
            state: 0,
            action: 2,
            reward: 1.5,
            next_state: 1,
        };
        q_update(&mut qt, &step, 1.0, 0.0);
        assert_eq!(qt.value(0, 2), 1.5);
        for s in 0..NUM_STATES {
            for a in 1..=4 {
                if (s, a) != (0, 2) {
                    assert_eq!(qt.value(s, a), 0.0);
                }
            }
        }
        // lr = 0 is out of contract
        let before = qt.clone();
        q_update(&mut qt, &step, 1e-12, 0.0); // minuscule lr barely moves it
        assert!((qt.value(0, 2) - before.value(0, 2)).abs() < 1e-9);
    }

    #[test]
    fn constant_reward_converges_geometrically() {
        let mut qt = QTable::new(1);
        let r = 2.25;
        for _ in 0..200 {
            q_update(
                &mut qt,
                &AgentStep {
                    state: 0,
                    action: 1,
                    reward: r,
                    next_state: 0,
                },
                0.1,
                0.0,
            );
        }
        // Q_t = r (1 - (1-lr)^t)
        let expect = r * (1.0 - 0.9f64.powi(200));
        assert!((qt.value(0, 1) - expect).abs() < 1e-9);
    }

    fn solo_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.num_ops = 1;
        cfg.sbs_per_op = 1;
        cfg.num_rbs = 1;
        cfg.rb_capacity = vec![1];
        cfg.rb_quota = vec![1];
        cfg.op_weights = vec![1.0];
        cfg.power_mode = PowerMode::QLearning;
        cfg.gamma = 0.0;
        cfg.lr = 0.2;
        cfg.lr_decay = 0.0;
        cfg.episodes = 4000;
        cfg
    }

    #[test]
    fn lone_sbs_learns_max_power() {
        // no interferers, gamma = 0: the gated rate increases with power,
        // so the greedy action must be the top level. Sample-average
        // learning (lr 1/(1+n)) separates the per-level reward means; the
        // temperature is sized to the ~20-bit reward scale so every arm
        // keeps getting sampled.
        let mut cfg = solo_cfg();
        cfg.num_power_levels = 4;
        cfg.lr = 1.0;
        cfg.lr_decay = 1.0;
        cfg.temp_tp = 4.0;
        cfg.temp_decay = 0.0; // fixed temperature keeps every arm sampled
        cfg.episodes = 8000;
        let radio = cfg.radio();
        let dep = sample_deployment(&cfg, &mut rng_from(4)).unwrap();
        let gains = LinkGains::new(&dep, &cfg);
        let matching = Matching::from_child_assignment(&[0], &cfg.rb_capacity).unwrap();
        let policy = PowerPolicy::uniform(1, &radio);
        let out = train_operator(
            &dep,
            &gains,
            &matching,
            0,
            &cfg,
            &radio,
            &policy,
            &mut rng_from(5),
        )
        .unwrap();
        assert_eq!(out.tables[0].greedy_action(0), cfg.num_power_levels);
        // reward positivity in the trace implies the threshold held
        assert!(out.reward_trace.iter().all(|r| *r >= 0.0));
    }

    #[test]
    fn zero_episodes_yields_zero_tables_and_uniform_pmf() {
        let mut cfg = solo_cfg();
        cfg.episodes = 0;
        let radio = cfg.radio();
        let dep = sample_deployment(&cfg, &mut rng_from(6)).unwrap();
        let gains = LinkGains::new(&dep, &cfg);
        let matching = Matching::from_child_assignment(&[0], &cfg.rb_capacity).unwrap();
        let policy = PowerPolicy::uniform(1, &radio);
        let out = train_operator(
            &dep,
            &gains,
            &matching,
            0,
            &cfg,
            &radio,
            &policy,
            &mut rng_from(7),
        )
        .unwrap();
        assert!(out.tables[0].row(0).iter().all(|&q| q == 0.0));
        let n = cfg.num_power_levels;
        assert!(out.pmf[0]
            .iter()
            .all(|&p| (p - 1.0 / n as f64).abs() < 1e-12));
        assert!(out.reward_trace.is_empty());
    }

    #[test]
    fn mutually_interfering_pair_matches_payoff_matrix_oracle() {
        // one operator, two SBSs forced onto a single RB: a 2-agent game.
        // The oracle evaluates the exhaustive expected payoff matrix over
        // the 4x4 power-level grid; the trained greedy actions must be
        // mutual best responses under that matrix in >= 9 of 10 seeds.
        let mut cfg = SimConfig::default();
        cfg.num_ops = 1;
        cfg.sbs_per_op = 2;
        cfg.num_rbs = 1;
        cfg.rb_capacity = vec![2];
        cfg.rb_quota = vec![1];
        cfg.op_weights = vec![1.0];
        cfg.power_mode = PowerMode::QLearning;
        cfg.num_power_levels = 4;
        cfg.gamma = 0.0;
        cfg.lr = 1.0;
        cfg.lr_decay = 1.0;
        cfg.temp_tp = 4.0;
        cfg.temp_decay = 0.0;
        cfg.episodes = 12_000;
        let radio = cfg.radio();
        let n = cfg.num_power_levels;

        let payoff =
            |gains: &LinkGains, who: usize, p_self: f64, p_other: f64, rng: &mut ChaCha8Rng| {
                let other = 1 - who;
                let draws = 20_000;
                let mut total = 0.0;
                for _ in 0..draws {
                    let signal = gains.gain[who][who] * p_self * exp1(rng);
                    let intf = gains.gain[other][who] * p_other * exp1(rng);
                    total += reward(signal / (intf + radio.noise_w), &radio);
                }
                total / draws as f64
            };

        let mut matches = 0;
        for seed in 0..10u64 {
            let dep = sample_deployment(&cfg, &mut rng_from(100 + seed)).unwrap();
            let gains = LinkGains::new(&dep, &cfg);
            let matching = Matching::from_child_assignment(&[0], &cfg.rb_capacity).unwrap();
            let policy = PowerPolicy::uniform(2, &radio);
            let out = train_operator(
                &dep,
                &gains,
                &matching,
                0,
                &cfg,
                &radio,
                &policy,
                &mut rng_from(200 + seed),
            )
            .unwrap();
            // read each agent's policy from its better-visited state row
            let learned: Vec<usize> = out
                .tables
                .iter()
                .map(|t| {
                    let v0: u32 = (1..=n).map(|a| t.visits(0, a)).sum();
                    let v1: u32 = (1..=n).map(|a| t.visits(1, a)).sum();
                    t.greedy_action(usize::from(v1 > v0))
                })
                .collect();
            // oracle: exhaustive payoff rows against the opponent's action
            let mut oracle_rng = rng_from(300 + seed);
            let mut mutual_best = true;
            for who in 0..2 {
                let opp_power = radio.power_levels_w[learned[1 - who] - 1];
                let mut best = (f64::NEG_INFINITY, 0usize);
                for a in 1..=n {
                    let value = payoff(
                        &gains,
                        who,
                        radio.power_levels_w[a - 1],
                        opp_power,
                        &mut oracle_rng,
                    );
                    if value > best.0 {
                        best = (value, a);
                    }
                }
                if best.1 != learned[who] {
                    mutual_best = false;
                }
            }
            if mutual_best {
                matches += 1;
            }
        }
        assert!(
            matches >= 9,
            "trained actions matched the payoff-matrix oracle in only {matches}/10 seeds"
        );
    }

    #[test]
    fn trained_policy_saves_power_relative_to_full() {
        let mut cfg = SimConfig::default();
        cfg.power_mode = PowerMode::QLearning;
        cfg.episodes = 400;
        let radio = cfg.radio();
        for seed in 0..5u64 {
            let dep = sample_deployment(&cfg, &mut rng_from(seed)).unwrap();
            let gains = LinkGains::new(&dep, &cfg);
            let matching =
                Matching::random_feasible(cfg.total_quota(), &cfg.rb_capacity, &mut rng_from(seed))
                    .unwrap();
            let policy = PowerPolicy::uniform(dep.num_sbs(), &radio);
            let full = PowerPolicy::full(dep.num_sbs(), &radio);
            for parent in 0..cfg.num_ops {
                let out = train_operator(
                    &dep,
                    &gains,
                    &matching,
                    parent,
                    &cfg,
                    &radio,
                    &policy,
                    &mut rng_from(1000 + seed),
                )
                .unwrap();
                let trained = PowerPolicy::from_pmfs(out.pmf.clone(), &radio);
                for (i, &f) in out.sbs.iter().enumerate() {
                    let mean = trained.mean_power_w(i);
                    assert!(
                        mean < radio.p_tot_w,
                        "seed {seed} SBS {f}: mean power not below p_tot"
                    );
                    assert!(mean <= full.mean_power_w(f));
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = solo_cfg();
        let radio = cfg.radio();
        let dep = sample_deployment(&cfg, &mut rng_from(8)).unwrap();
        let gains = LinkGains::new(&dep, &cfg);
        let matching = Matching::from_child_assignment(&[0], &cfg.rb_capacity).unwrap();
        let policy = PowerPolicy::uniform(1, &radio);
        let a = train_operator(
            &dep,
            &gains,
            &matching,
            0,
            &cfg,
            &radio,
            &policy,
            &mut rng_from(9),
        )
        .unwrap();
        let b = train_operator(
            &dep,
            &gains,
            &matching,
            0,
            &cfg,
            &radio,
            &policy,
            &mut rng_from(9),
        )
        .unwrap();
        assert_eq!(a.tables, b.tables);
        assert_eq!(a.pmf, b.pmf);
    }
}
