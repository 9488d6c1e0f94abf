//! Acceptance suite: every shipping criterion as one test with a pinned
//! tolerance, printing one pass/fail line (run with `--nocapture` to see
//! them). The heavy directional reproductions share one set of experiment
//! arms built on first use.
//!
//!   cargo test -p specshare --test acceptance -- --nocapture

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use specshare::config::{DesirabilityKind, PowerMode, SimConfig, SolverKind};
use specshare::harness::verify::{
    check_bandit_convergence, check_corollary1, check_lemma2, check_softmax_limits, InstanceWorld,
};
use specshare::harness::{run_experiment, welfare_quantile, ExperimentResult};
use specshare::learning::softmax_probs;
use specshare::matching::{enumerate_optimal, mcmc, Game, Matching};
use specshare::rates::expected_rate_ppp;
use specshare::rng::{derive_seed, exp1, rng_from};

const MASTER_SEED: u64 = 11;

fn pass(line: &str) {
    println!("{line}: PASS");
}

// ---------------------------------------------------------------- 1-3 ----

#[test]
fn criterion1_theorem1_local_potential_maxima_are_pairwise_stable() {
    let started = Instant::now();
    let (counterexamples, maxima) = specshare::harness::verify::check_theorem1(50, MASTER_SEED);
    assert!(maxima > 0, "no local maxima found across instances");
    assert_eq!(
        counterexamples, 0,
        "{counterexamples} of {maxima} local potential maxima were unstable"
    );
    assert!(
        started.elapsed().as_secs() < 300,
        "theorem-1 suite exceeded 5 minutes"
    );
    pass(&format!(
        "criterion 1 (theorem1: {maxima} maxima over 50 instances, 0 unstable)"
    ));
}

#[test]
fn criterion2_lemma2_approved_swaps_strictly_raise_potential() {
    let (violations, swaps) = check_lemma2(10_000, MASTER_SEED ^ 0x5eed);
    assert!(swaps >= 10_000);
    assert_eq!(
        violations, 0,
        "{violations} of {swaps} approved swaps did not raise the potential"
    );
    pass(&format!(
        "criterion 2 (lemma2: {swaps} approved swaps, all potential-increasing)"
    ));
}

#[test]
fn criterion3_corollary1_collision_free_welfare_maxima_are_stable() {
    let (counterexamples, maxima) = check_corollary1(50, MASTER_SEED ^ 0xc0de);
    assert!(maxima > 0);
    assert_eq!(counterexamples, 0);
    pass(&format!(
        "criterion 3 (corollary1: {maxima} welfare maxima over 50 instances, 0 unstable)"
    ));
}

// ------------------------------------------------------------------ 4 ----

/// Monte Carlo rate over an explicit Poisson field: victim UE at `victim`
/// inside a `window`-sided square, serving SBS at distance `r_ff`,
/// `alpha`-power pathloss, Rayleigh fades, no noise, interferer powers
/// uniform over `levels`. Bits/s/Hz.
#[allow(clippy::too_many_arguments)]
fn ppp_rate_oracle(
    lambda: f64,
    alpha: f64,
    r_ff: f64,
    p_f: f64,
    levels: &[f64],
    window: f64,
    victim: (f64, f64),
    realizations: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mean_points = lambda * window * window;
    let signal_base = p_f / (r_ff * r_ff).powf(alpha / 2.0);
    let fourth_power = alpha == 4.0;
    let mean_points_total = mean_points;
    let mut total = 0.0;
    for _ in 0..realizations {
        // Poisson count via exponential inter-arrival sum
        let mut acc = exp1(rng);
        let mut count = 0usize;
        while acc < mean_points_total {
            count += 1;
            acc += exp1(rng);
        }
        let mut interference = 0.0;
        for _ in 0..count {
            let x: f64 = rng.gen::<f64>() * window;
            let y: f64 = rng.gen::<f64>() * window;
            let d2 = (x - victim.0).powi(2) + (y - victim.1).powi(2);
            let d2 = d2.max(1e-4); // matches the 0.01 m^2 clamp scale
            let p = levels[rng.gen_range(0..levels.len())];
            let loss = if fourth_power { d2 * d2 } else { d2.powf(alpha / 2.0) };
            interference += p * exp1(rng) / loss;
        }
        let signal = signal_base * exp1(rng);
        if interference > 0.0 {
            total += (1.0 + signal / interference).log2();
        }
        // zero interferers: the noise-free rate is unbounded; the analytic
        // reference assumes an infinite field, so the window is sized to
        // make this a measure-zero event
    }
    total / realizations as f64
}

#[test]
fn criterion4_analytic_expected_rate_matches_ppp_simulation() {
    let started = Instant::now();
    // the analytic integral holds for the fourth-power law without noise;
    // the exponent is forced to 4 here and never mixed into the pathloss
    // slope of the deployment simulation
    let mut cfg = SimConfig::default();
    cfg.alpha = 4.0;
    let radio = cfg.radio();
    let levels = &radio.power_levels_w;
    let mean_sqrt: f64 = levels.iter().map(|w| w.sqrt()).sum::<f64>() / levels.len() as f64;
    let p_f = radio.p_tot_w;

    // (lambda, r_ff, realizations): densities chosen so a 200 m window
    // truncates a negligible share of the interference
    let points = [
        (0.05, 5.0, 200_000usize),
        (0.02, 3.0, 150_000),
        (0.01, 2.0, 100_000),
    ];
    for (i, &(lambda, r_ff, realizations)) in points.iter().enumerate() {
        let analytic = expected_rate_ppp(lambda, p_f, mean_sqrt, r_ff).unwrap();
        let window = 200.0;
        let mut rng = rng_from(derive_seed(MASTER_SEED, 40 + i as u64));
        let mc = ppp_rate_oracle(
            lambda,
            cfg.alpha,
            r_ff,
            p_f,
            levels,
            window,
            (window / 2.0, window / 2.0),
            realizations,
            &mut rng,
        );
        let rel = (mc - analytic).abs() / analytic;
        assert!(
            rel <= 0.05,
            "lambda={lambda}, r_ff={r_ff}: analytic {analytic} vs monte carlo {mc} (rel {rel:.4})"
        );
    }
    assert!(
        started.elapsed().as_secs() < 600,
        "analytic-rate validation exceeded 10 minutes"
    );
    pass("criterion 4 (analytic expected rate within 5% of the Poisson-field simulation at 3 points)");
}

#[test]
fn slivnyak_rate_is_location_independent_away_from_the_boundary() {
    // dense field so that a 5 m margin carries the dominant interference;
    // the rate statistics then match the window-center statistics
    let cfg = SimConfig::default();
    let radio = cfg.radio();
    let levels = &radio.power_levels_w;
    let lambda = 0.5;
    let window = 40.0;
    let realizations = 120_000;
    let mut rng_a = rng_from(derive_seed(MASTER_SEED, 50));
    let mut rng_b = rng_from(derive_seed(MASTER_SEED, 51));
    let center = ppp_rate_oracle(
        lambda,
        4.0,
        1.5,
        radio.p_tot_w,
        levels,
        window,
        (window / 2.0, window / 2.0),
        realizations,
        &mut rng_a,
    );
    let edge_interior = ppp_rate_oracle(
        lambda,
        4.0,
        1.5,
        radio.p_tot_w,
        levels,
        window,
        (5.0, window / 2.0),
        realizations,
        &mut rng_b,
    );
    let rel = (center - edge_interior).abs() / center;
    assert!(
        rel < 0.03,
        "center {center} vs edge-interior {edge_interior} (rel {rel:.4})"
    );
    pass("slivnyak (rate independent of test location within monte carlo error)");
}

// ------------------------------------------------------------------ 5 ----

#[test]
fn criterion5_mcmc_reaches_the_enumerated_optimum() {
    // 5-child / 3-RB instance under the production (simulated) model
    let mut cfg = SimConfig::default();
    cfg.num_ops = 2;
    cfg.sbs_per_op = 1;
    cfg.rb_quota = vec![2, 3];
    cfg.op_weights = vec![1.0, 1.0];
    cfg.num_rbs = 3;
    cfg.rb_capacity = vec![2, 2, 2];
    cfg.desirability = DesirabilityKind::Simulated;
    cfg.power_mode = PowerMode::Full;
    cfg.validate().unwrap();

    let mut hits = 0;
    let runs = 100;
    for run in 0..runs {
        let world = InstanceWorld::sample(cfg.clone(), derive_seed(MASTER_SEED, 600 + run));
        let ctx = world.ctx();
        let mut game = Game::new(&ctx);
        let (_, ledger) = enumerate_optimal(&mut game).expect("instance fits the oracle bounds");
        let optimum = ledger.best_welfare().welfare;
        let m = Matching::random_feasible(
            ctx.num_children(),
            &world.cfg.rb_capacity,
            &mut rng_from(derive_seed(MASTER_SEED, 700 + run)),
        )
        .unwrap();
        let state = game.build_state(m);
        let out = mcmc(
            &mut game,
            state,
            &mut rng_from(derive_seed(MASTER_SEED, 800 + run)),
            cfg.effective_max_iterations(),
            cfg.temp_tb,
        );
        let best = out.state.welfare(&ctx);
        if best >= optimum * 0.99 {
            hits += 1;
        }
    }
    assert!(
        hits >= 95,
        "MCMC reached 99% of the optimum in only {hits}/{runs} runs"
    );
    pass(&format!(
        "criterion 5 (MCMC within 1% of the enumerated optimum in {hits}/{runs} runs)"
    ));
}

// ------------------------------------------------------------------ 6 ----

#[test]
fn criterion6_qlearning_sanity() {
    assert!(
        check_bandit_convergence(10_000, 0.01, 0.02),
        "bandit Q missed the mean reward by >2%"
    );

    // softmax limits at 1e-6
    let n = 12;
    let equal = softmax_probs(&vec![3.7; n], 0.9);
    let sum: f64 = equal.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    for p in &equal {
        assert!((p - 1.0 / n as f64).abs() < 1e-6);
    }
    let mut q = vec![0.0; n];
    q[7] = 1.0;
    let sharp = softmax_probs(&q, 1e-3);
    assert!(sharp[7] > 1.0 - 1e-6);
    assert!(check_softmax_limits());
    pass("criterion 6 (bandit convergence within 2%; softmax limits to 1e-6)");
}

// ------------------------------------------------------------------ 7 ----

/// Reference experiment: the paper-style constants over a 20 m square
/// (L=5, b=4, quota [2,3,4], 10 dBm over 10 levels, -120 dBm noise, 3 dB
/// threshold), one SBS per operator, inter-operator wall loss, MCMC.
fn reference_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.area_side = 20.0;
    cfg.num_ops = 3;
    cfg.sbs_per_op = 1;
    cfg.ue_max_dist = 5.0;
    cfg.pl_const_db = 37.0;
    cfg.pl_slope_db = 20.0;
    cfg.wall_loss_db = 15.0;
    cfg.wall_loss_enabled = true;
    cfg.shadow_sigma_db = 4.0;
    cfg.noise_dbm = -120.0;
    cfg.p_tot_dbm = 10.0;
    cfg.num_power_levels = 10;
    cfg.sinr_th_db = 3.0;
    cfg.num_rbs = 5;
    cfg.rb_capacity = vec![4; 5];
    cfg.rb_quota = vec![2, 3, 4];
    cfg.op_weights = vec![1.0; 3];
    cfg.solver = SolverKind::Mcmc;
    cfg.power_mode = PowerMode::Full;
    cfg.samples = 2500;
    cfg.seed = MASTER_SEED;
    cfg.validate().unwrap();
    cfg
}

fn quota_for(k: usize) -> Vec<usize> {
    match k {
        3 => vec![2, 3, 4],
        4 => vec![2, 3, 4, 2],
        5 => vec![2, 3, 4, 2, 2],
        6 => vec![2, 3, 4, 4, 5, 2],
        _ => unreachable!(),
    }
}

struct DirectionalArms {
    modes: BTreeMap<&'static str, ExperimentResult>,
    k_grid: BTreeMap<usize, ExperimentResult>,
    l_grid: BTreeMap<usize, ExperimentResult>,
    greedy: ExperimentResult,
    c_small: ExperimentResult,
    c_large: ExperimentResult,
}

static ARMS: OnceLock<DirectionalArms> = OnceLock::new();

fn arms() -> &'static DirectionalArms {
    ARMS.get_or_init(|| {
        let started = Instant::now();
        let base = reference_config();

        let mut modes = BTreeMap::new();
        for (name, mode) in [
            ("full", PowerMode::Full),
            ("uniform", PowerMode::Uniform),
            ("qlearning", PowerMode::QLearning),
        ] {
            let mut cfg = base.clone();
            cfg.power_mode = mode;
            eprintln!("[arms] running mode={name}");
            modes.insert(name, run_experiment(&cfg).unwrap());
        }

        let mut k_grid = BTreeMap::new();
        k_grid.insert(3, modes["full"].clone());
        for k in [4usize, 5, 6] {
            let mut cfg = base.clone();
            cfg.num_ops = k;
            cfg.rb_quota = quota_for(k);
            cfg.op_weights = vec![1.0; k];
            cfg.validate().unwrap();
            eprintln!("[arms] running K={k}");
            k_grid.insert(k, run_experiment(&cfg).unwrap());
        }

        let mut l_grid = BTreeMap::new();
        l_grid.insert(5, modes["full"].clone());
        for l in [8usize, 10, 14] {
            let mut cfg = base.clone();
            cfg.num_rbs = l;
            cfg.rb_capacity = vec![4; l];
            cfg.validate().unwrap();
            eprintln!("[arms] running L={l}");
            l_grid.insert(l, run_experiment(&cfg).unwrap());
        }

        let mut greedy_cfg = base.clone();
        greedy_cfg.solver = SolverKind::Greedy;
        eprintln!("[arms] running greedy");
        let greedy = run_experiment(&greedy_cfg).unwrap();

        let mut small = base.clone();
        small.num_ops = 5;
        small.rb_quota = vec![2, 2, 1, 1, 2];
        small.op_weights = vec![1.0; 5];
        small.num_rbs = 10;
        small.rb_capacity = vec![4; 10];
        small.validate().unwrap();
        eprintln!("[arms] running c=[2,2,1,1,2]");
        let c_small = run_experiment(&small).unwrap();

        let mut large = small.clone();
        large.rb_quota = vec![2, 4, 4, 5, 5];
        large.validate().unwrap();
        eprintln!("[arms] running c=[2,4,4,5,5]");
        let c_large = run_experiment(&large).unwrap();

        eprintln!(
            "[arms] all arms done in {:.0}s",
            started.elapsed().as_secs_f64()
        );
        DirectionalArms {
            modes,
            k_grid,
            l_grid,
            greedy,
            c_small,
            c_large,
        }
    })
}

fn median(res: &ExperimentResult) -> f64 {
    welfare_quantile(res, 0.5)
}

#[test]
fn criterion7i_power_mode_ordering() {
    let arms = arms();
    let full = median(&arms.modes["full"]);
    let ql = median(&arms.modes["qlearning"]);
    let uni = median(&arms.modes["uniform"]);
    assert!(
        full >= ql && ql >= uni,
        "median welfare ordering violated: full {full}, qlearning {ql}, uniform {uni}"
    );
    pass(&format!(
        "criterion 7(i) (median welfare full {full:.2} >= qlearning {ql:.2} >= uniform {uni:.2})"
    ));
}

#[test]
fn criterion7ii_welfare_cdf_improves_with_more_operators() {
    let arms = arms();
    for q in [0.25, 0.5, 0.75] {
        for k in [3usize, 4, 5] {
            let lo = welfare_quantile(&arms.k_grid[&k], q);
            let hi = welfare_quantile(&arms.k_grid[&(k + 1)], q);
            assert!(
                hi > lo,
                "quantile {q} did not improve from K={k} ({lo}) to K={} ({hi})",
                k + 1
            );
        }
    }
    let medians: Vec<f64> = [3usize, 4, 5, 6]
        .iter()
        .map(|k| median(&arms.k_grid[k]))
        .collect();
    pass(&format!(
        "criterion 7(ii) (welfare CDF improves with K: medians {:.2} < {:.2} < {:.2} < {:.2})",
        medians[0], medians[1], medians[2], medians[3]
    ));
}

#[test]
fn criterion7iii_per_operator_welfare_directions() {
    let arms = arms();
    for k in [3usize, 4, 5] {
        assert!(
            arms.k_grid[&k].per_op_welfare > arms.k_grid[&(k + 1)].per_op_welfare,
            "per-operator welfare did not decrease from K={k} to K={}",
            k + 1
        );
    }
    // welfare saturates once every child can sit alone on an RB, so the
    // final grid step is allowed to tie
    assert!(arms.l_grid[&8].per_op_welfare > arms.l_grid[&5].per_op_welfare);
    assert!(arms.l_grid[&10].per_op_welfare > arms.l_grid[&8].per_op_welfare);
    assert!(arms.l_grid[&14].per_op_welfare >= arms.l_grid[&10].per_op_welfare);
    pass(&format!(
        "criterion 7(iii) (per-OP welfare falls with K: {:.2} > {:.2} > {:.2} > {:.2}; rises with L: {:.2} < {:.2} < {:.2} <= {:.2})",
        arms.k_grid[&3].per_op_welfare,
        arms.k_grid[&4].per_op_welfare,
        arms.k_grid[&5].per_op_welfare,
        arms.k_grid[&6].per_op_welfare,
        arms.l_grid[&5].per_op_welfare,
        arms.l_grid[&8].per_op_welfare,
        arms.l_grid[&10].per_op_welfare,
        arms.l_grid[&14].per_op_welfare,
    ));
}

#[test]
fn criterion7iv_mcmc_beats_greedy_which_converges_in_fewer_proposals() {
    let arms = arms();
    let mcmc_arm = &arms.modes["full"];
    let greedy_arm = &arms.greedy;
    assert_eq!(mcmc_arm.samples.len(), greedy_arm.samples.len());
    let mut mcmc_wins = 0usize;
    for (m, g) in mcmc_arm.samples.iter().zip(&greedy_arm.samples) {
        assert_eq!(m.seed, g.seed, "arms must share per-sample seeds");
        if m.final_s >= g.final_s {
            mcmc_wins += 1;
        }
    }
    let frac = mcmc_wins as f64 / mcmc_arm.samples.len() as f64;
    assert!(
        frac >= 0.60,
        "MCMC matched or beat greedy on only {:.1}% of seeds",
        frac * 100.0
    );

    let mut greedy_proposals: Vec<usize> = greedy_arm.samples.iter().map(|t| t.proposals).collect();
    greedy_proposals.sort_unstable();
    let median_greedy = greedy_proposals[greedy_proposals.len() / 2];
    let mcmc_iters = reference_config().effective_max_iterations();
    assert!(
        median_greedy < mcmc_iters,
        "greedy median proposals {median_greedy} not below the MCMC budget {mcmc_iters}"
    );
    pass(&format!(
        "criterion 7(iv) (MCMC >= greedy on {:.1}% of seeds; greedy fixed point after {median_greedy} proposals vs {mcmc_iters} MCMC iterations)",
        frac * 100.0
    ));
}

#[test]
fn criterion7v_small_quota_dominates_large_quota() {
    let arms = arms();
    for q in [0.25, 0.5, 0.75] {
        let small = welfare_quantile(&arms.c_small, q);
        let large = welfare_quantile(&arms.c_large, q);
        assert!(
            small > large,
            "quantile {q}: c=[2,2,1,1,2] ({small}) does not dominate c=[2,4,4,5,5] ({large})"
        );
    }
    pass(&format!(
        "criterion 7(v) (welfare CDF for c=[2,2,1,1,2] dominates c=[2,4,4,5,5]: medians {:.2} > {:.2})",
        median(&arms.c_small),
        median(&arms.c_large)
    ));
}

// ------------------------------------------------------------------ 8 ----

#[test]
fn criterion8_byte_identical_outputs_under_concurrency() {
    let mut cfg = reference_config();
    cfg.samples = 8;
    cfg.power_mode = PowerMode::QLearning; // exercises every subsystem
    cfg.episodes = 50;
    let tmp = std::env::temp_dir().join(format!("specshare_accept8_{}", std::process::id()));
    let read_all = |dir: &std::path::Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect()
    };

    let mut outputs = Vec::new();
    for (i, workers) in [1usize, 2, 3].into_iter().enumerate() {
        let mut c = cfg.clone();
        c.workers = workers;
        let res = run_experiment(&c).unwrap();
        let dir = tmp.join(format!("run{i}"));
        specshare::harness::emit_results(&res, &c, &dir).unwrap();
        let mut snapshot = read_all(&dir);
        // the summary echoes the configured worker count by design; outputs
        // must agree on everything else byte for byte
        snapshot.retain(|(name, _)| name != "summary.txt");
        outputs.push(snapshot);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);

    // identical reruns are byte-identical including the summary
    let rerun_dir = tmp.join("rerun");
    let res = run_experiment(&cfg).unwrap();
    specshare::harness::emit_results(&res, &cfg, &rerun_dir).unwrap();
    let first = read_all(&rerun_dir);
    let res2 = run_experiment(&cfg).unwrap();
    specshare::harness::emit_results(&res2, &cfg, &rerun_dir).unwrap();
    let second = read_all(&rerun_dir);
    assert_eq!(first, second);
    std::fs::remove_dir_all(&tmp).ok();
    pass("criterion 8 (byte-identical outputs across reruns and worker counts)");
}
