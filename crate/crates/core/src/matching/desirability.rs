//! Desirability evaluation. Two models:
//!
//! * simulated: Monte Carlo over fades, power draws and channel-access
//!   draws on the realized deployment. Each SBS of the evaluated parent is
//!   conditioned to transmit on the RB; every other SBS whose operator
//!   holds the RB (a co-occupant parent, or the parent itself for its
//!   remaining SBSs) accesses it with probability 1 over that operator's
//!   held-RB count, which is how the system model splits an operator's
//!   cells over its spectrum. Intra- and inter-operator interference both
//!   appear, thinned by the access dilution.
//! * count-analytic: the expected-rate integral with interferer intensity
//!   proportional to the raw co-occupant count. No geometry externalities,
//!   which is what makes bystander desirabilities swap-invariant.
//!
//! Each evaluation runs on an RNG seeded from (context seed, parent,
//! pattern), so the value is a pure function of its cache key.

use rand::Rng;

use crate::rates::{expected_rate_ppp, gated_rate};
use crate::rng::{exp1, mix_seed, rng_from};

use super::GameContext;

/// Cache key of a simulated evaluation: the evaluated parent, its held-RB
/// count, and 3 bits of held-RB count per co-occupant parent (packed by
/// parent index; zero means absent). Geometry does not depend on which RB
/// carries the pattern, so the RB itself is not part of the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(super) struct SimKey {
    pub parent: u8,
    pub own_held: u8,
    pub co_held: u64,
}

pub(super) fn sim_key(
    ctx: &GameContext,
    parent: usize,
    own_held: usize,
    co: &[(usize, usize)],
) -> SimKey {
    debug_assert!(
        ctx.cfg.num_ops <= 21,
        "held-count packing supports up to 21 operators"
    );
    let mut co_held = 0u64;
    for &(p, held) in co {
        debug_assert!(p != parent && held >= 1);
        co_held |= (held.min(7) as u64) << (3 * p);
    }
    SimKey {
        parent: parent as u8,
        own_held: own_held.min(7) as u8,
        co_held,
    }
}

pub(super) fn eval_simulated(ctx: &GameContext, key: SimKey) -> f64 {
    let per_sbs = simulated_per_sbs(ctx, key);
    ctx.cfg.sbs_weight * per_sbs.iter().sum::<f64>()
}

/// Mean QoS-gated rate of each SBS of the key's parent transmitting on an
/// RB shared per the key's held-count pattern (unweighted; the
/// desirability applies the per-SBS weight).
pub(super) fn simulated_per_sbs(ctx: &GameContext, key: SimKey) -> Vec<f64> {
    let seed = mix_seed(
        ctx.eval_seed,
        &[1, key.parent as u64, key.own_held as u64, key.co_held],
    );
    let mut rng = rng_from(seed);
    let parent = key.parent as usize;
    let own = &ctx.parent_sbs[parent];
    // (sbs, access denominator): the SBS transmits on the evaluated RB in a
    // draw when a uniform pick over its operator's held RBs lands here
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for &f in own {
        candidates.push((f, key.own_held.max(1) as usize));
    }
    for p in 0..ctx.cfg.num_ops {
        let held = ((key.co_held >> (3 * p)) & 0x7) as usize;
        if held > 0 {
            for &f in &ctx.parent_sbs[p] {
                candidates.push((f, held));
            }
        }
    }
    let draws = ctx.cfg.rate_draws;
    let th = ctx.radio.sinr_th;
    let noise = ctx.radio.noise_w;
    let mut rate_sum = vec![0.0; own.len()];
    let mut active = vec![false; candidates.len()];
    let mut power = vec![0.0; candidates.len()];
    for _ in 0..draws {
        for (i, &(t, dilution)) in candidates.iter().enumerate() {
            active[i] = dilution <= 1 || rng.gen_range(0..dilution) == 0;
            if active[i] {
                power[i] = ctx.policy.sample_power_w(t, &mut rng);
            }
        }
        for (vi, &f) in own.iter().enumerate() {
            // the measured SBS is conditioned to use this RB
            let signal =
                ctx.gains.gain[f][f] * ctx.policy.sample_power_w(f, &mut rng) * exp1(&mut rng);
            let mut interference = 0.0;
            for (i, &(t, _)) in candidates.iter().enumerate() {
                if active[i] && t != f {
                    interference += ctx.gains.gain[t][f] * power[i] * exp1(&mut rng);
                }
            }
            rate_sum[vi] += gated_rate(signal / (interference + noise), th);
        }
    }
    rate_sum.iter().map(|r| r / draws as f64).collect()
}

pub(super) fn eval_count(ctx: &GameContext, parent: usize, n_co: usize) -> f64 {
    let per_sbs = count_per_sbs(ctx, parent, n_co);
    ctx.cfg.sbs_weight * per_sbs.iter().sum::<f64>()
}

/// Analytic per-SBS rate as a function of the co-occupant count only:
/// intensity F per co-occupant child over the deployment area, floored so
/// the interference-free case stays finite.
pub(super) fn count_per_sbs(ctx: &GameContext, parent: usize, n_co: usize) -> Vec<f64> {
    let area = ctx.cfg.area_side * ctx.cfg.area_side;
    let own = &ctx.parent_sbs[parent];
    let lambda = (ctx.cfg.sbs_per_op * n_co) as f64 / area;
    let lambda = lambda.max(0.25 / area);
    let mean_sqrt = ctx.policy.mean_sqrt_w;
    own.iter()
        .map(|&f| {
            let r_ff = ctx.dep.link_distance(f, f);
            ctx.policy.pmf[f]
                .iter()
                .zip(&ctx.policy.levels_w)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, w)| {
                    p * expected_rate_ppp(lambda, *w, mean_sqrt, r_ff)
                        .expect("validated analytic rate inputs")
                })
                .sum()
        })
        .collect()
}

/// Per-SBS rates of `parent` on RB `l` under matching `m`, dispatching on
/// the configured model (used by the rate report).
pub(super) fn per_sbs_rates_on(
    ctx: &GameContext,
    m: &super::Matching,
    parent: usize,
    l: usize,
) -> Vec<f64> {
    let co: Vec<usize> = m
        .children_on(l)
        .into_iter()
        .filter(|&c| ctx.parent_of(c) != parent)
        .collect();
    match ctx.cfg.desirability {
        crate::config::DesirabilityKind::Simulated => {
            let held = |p: usize| m.rbs_held(&ctx.children_of(p)).len();
            let mut own_held = held(parent);
            if !m.rbs_held(&ctx.children_of(parent)).contains(&l) {
                own_held += 1; // hypothetical access to an RB the parent does not hold
            }
            let mut co_parents: Vec<(usize, usize)> = co
                .iter()
                .map(|&c| ctx.parent_of(c))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .map(|p| (p, held(p)))
                .collect();
            co_parents.sort_unstable();
            simulated_per_sbs(ctx, sim_key(ctx, parent, own_held, &co_parents))
        }
        crate::config::DesirabilityKind::CountAnalytic => count_per_sbs(ctx, parent, co.len()),
    }
}
