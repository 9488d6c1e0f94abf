//! Many-to-one matching of augmented (child) operators to resource blocks,
//! with externalities: a child's utility is the weighted sum rate its
//! parent's SBSs would obtain on its RB given the current co-occupants,
//! masked to zero when a sibling shares the RB.
//!
//! Spare RB capacity is filled by virtual "vacancy" players so that moving
//! into an unused slot is expressible as a swap; vacancies have zero
//! desirability and never block an approval.

mod desirability;
mod enumerate;
mod solvers;

pub use enumerate::{enumerate_optimal, Ledger, LedgerEntry};
pub use solvers::{greedy_swap, mcmc, SolverOutcome};

use std::collections::HashMap;

use crate::channel::{Deployment, LinkGains};
use crate::config::{DesirabilityKind, RadioParams, SimConfig};
use crate::error::{Error, Result};
use crate::power::PowerPolicy;
use crate::rates::{self, ParentWelfare, RateReport};

/// One child operator: an identical copy of its parent competing for a
/// single RB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedOp {
    pub child: usize,
    pub parent: usize,
    pub sibling_index: usize,
}

/// Expand the quota vector into the augmented operator set: parent k gets
/// `quota[k]` children, each inheriting all of the parent's SBSs.
pub fn augment(quota: &[usize]) -> Vec<AugmentedOp> {
    assert!(quota.iter().all(|&c| c >= 1), "every RB quota must be >= 1");
    let mut ops = Vec::with_capacity(quota.iter().sum());
    for (parent, &c) in quota.iter().enumerate() {
        for sibling_index in 0..c {
            ops.push(AugmentedOp {
                child: ops.len(),
                parent,
                sibling_index,
            });
        }
    }
    ops
}

/// Assignment of players (children followed by vacancy fillers) to RBs.
/// Every RB holds exactly its capacity in players, so a swap can never
/// violate the capacity constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    assign: Vec<usize>,
    occupancy: Vec<Vec<usize>>,
    num_children: usize,
}

impl Matching {
    /// Uniformly random feasible matching: players shuffled into the slot
    /// list (RB l repeated `capacities[l]` times).
    pub fn random_feasible(
        num_children: usize,
        capacities: &[usize],
        rng: &mut impl rand::Rng,
    ) -> Result<Matching> {
        let total: usize = capacities.iter().sum();
        if total < num_children {
            return Err(Error::infeasible(format!(
                "total RB capacity {total} < {num_children} children"
            )));
        }
        let mut slots: Vec<usize> = Vec::with_capacity(total);
        for (rb, &cap) in capacities.iter().enumerate() {
            slots.extend(std::iter::repeat(rb).take(cap));
        }
        // Fisher-Yates
        for i in (1..slots.len()).rev() {
            let j = rng.gen_range(0..=i);
            slots.swap(i, j);
        }
        Ok(Matching::from_assign(slots, num_children, capacities.len()))
    }

    /// Build from an explicit child -> RB assignment; vacancies fill the
    /// remaining capacity in ascending RB order.
    pub fn from_child_assignment(children_rb: &[usize], capacities: &[usize]) -> Result<Matching> {
        let mut remaining = capacities.to_vec();
        for (c, &rb) in children_rb.iter().enumerate() {
            if rb >= capacities.len() {
                return Err(Error::infeasible(format!(
                    "child {c} assigned to unknown RB {rb}"
                )));
            }
            if remaining[rb] == 0 {
                return Err(Error::infeasible(format!("RB {rb} over capacity")));
            }
            remaining[rb] -= 1;
        }
        let mut assign = children_rb.to_vec();
        for (rb, &spare) in remaining.iter().enumerate() {
            assign.extend(std::iter::repeat(rb).take(spare));
        }
        Ok(Matching::from_assign(
            assign,
            children_rb.len(),
            capacities.len(),
        ))
    }

    fn from_assign(assign: Vec<usize>, num_children: usize, num_rbs: usize) -> Matching {
        let mut occupancy = vec![Vec::new(); num_rbs];
        for (p, &rb) in assign.iter().enumerate() {
            occupancy[rb].push(p);
        }
        Matching {
            assign,
            occupancy,
            num_children,
        }
    }

    pub fn num_players(&self) -> usize {
        self.assign.len()
    }

    pub fn num_children(&self) -> usize {
        self.num_children
    }

    pub fn num_rbs(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_vacancy(&self, player: usize) -> bool {
        player >= self.num_children
    }

    pub fn rb_of(&self, player: usize) -> usize {
        self.assign[player]
    }

    /// RB of a child; `None` is reserved for future partial matchings, the
    /// vacancy-complete representation always matches every child.
    pub fn child_rb(&self, child: usize) -> Option<usize> {
        (child < self.num_children).then(|| self.assign[child])
    }

    pub fn players_on(&self, rb: usize) -> &[usize] {
        &self.occupancy[rb]
    }

    pub fn children_on(&self, rb: usize) -> Vec<usize> {
        self.occupancy[rb]
            .iter()
            .copied()
            .filter(|&p| p < self.num_children)
            .collect()
    }

    /// Exchange the RBs of two players; all other assignments unchanged.
    pub fn swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (ra, rb) = (self.assign[a], self.assign[b]);
        if ra == rb {
            return;
        }
        self.assign[a] = rb;
        self.assign[b] = ra;
        self.occupancy[ra].retain(|&p| p != a);
        self.occupancy[rb].retain(|&p| p != b);
        let ia = self.occupancy[rb].partition_point(|&p| p < a);
        self.occupancy[rb].insert(ia, a);
        let ib = self.occupancy[ra].partition_point(|&p| p < b);
        self.occupancy[ra].insert(ib, b);
    }

    /// Distinct RBs held by a parent's children.
    pub fn rbs_held(&self, children: &[usize]) -> Vec<usize> {
        let mut rbs: Vec<usize> = children.iter().map(|&c| self.assign[c]).collect();
        rbs.sort_unstable();
        rbs.dedup();
        rbs
    }

    pub fn child_assignment(&self) -> Vec<usize> {
        self.assign[..self.num_children].to_vec()
    }

    /// Consistency and constraint check (used by debug runs and tests):
    /// occupancy mirrors assign, every RB is exactly at capacity, and every
    /// parent holds at most its quota of distinct RBs.
    pub fn validate(
        &self,
        capacities: &[usize],
        quota: &[usize],
        children: &[AugmentedOp],
    ) -> Result<()> {
        if self.occupancy.len() != capacities.len() {
            return Err(Error::infeasible("occupancy/capacity length mismatch"));
        }
        for (rb, occ) in self.occupancy.iter().enumerate() {
            if occ.len() != capacities[rb] {
                return Err(Error::infeasible(format!(
                    "RB {rb} holds {} players, capacity {}",
                    occ.len(),
                    capacities[rb]
                )));
            }
            for &p in occ {
                if self.assign[p] != rb {
                    return Err(Error::infeasible("assign/occupancy inconsistency"));
                }
            }
        }
        for (parent, &c) in quota.iter().enumerate() {
            let kids: Vec<usize> = children
                .iter()
                .filter(|o| o.parent == parent)
                .map(|o| o.child)
                .collect();
            if kids.len() != c {
                return Err(Error::infeasible("augmentation/quota mismatch"));
            }
            if self.rbs_held(&kids).len() > c {
                return Err(Error::infeasible(format!(
                    "parent {parent} exceeds quota {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Everything a matching game needs about the world: deployment, gains,
/// power policy and the augmented operator set. Immutable during a solver
/// pass; the power policy changes only between outer learning rounds.
pub struct GameContext<'a> {
    pub cfg: &'a SimConfig,
    pub radio: RadioParams,
    pub dep: &'a Deployment,
    pub gains: &'a LinkGains,
    pub children: Vec<AugmentedOp>,
    pub parent_sbs: Vec<Vec<usize>>,
    pub children_by_parent: Vec<Vec<usize>>,
    pub policy: PowerPolicy,
    /// Base seed of the per-evaluation RNG streams; together with the cache
    /// keys it makes desirabilities pure functions of (deployment, pattern).
    pub eval_seed: u64,
}

impl<'a> GameContext<'a> {
    pub fn new(
        cfg: &'a SimConfig,
        dep: &'a Deployment,
        gains: &'a LinkGains,
        policy: PowerPolicy,
        eval_seed: u64,
    ) -> GameContext<'a> {
        let children = augment(&cfg.rb_quota);
        let parent_sbs: Vec<Vec<usize>> = (0..cfg.num_ops).map(|k| dep.sbs_of_op(k)).collect();
        let mut children_by_parent = vec![Vec::new(); cfg.num_ops];
        for op in &children {
            children_by_parent[op.parent].push(op.child);
        }
        GameContext {
            cfg,
            radio: cfg.radio(),
            dep,
            gains,
            children,
            parent_sbs,
            children_by_parent,
            policy,
            eval_seed,
        }
    }

    pub fn num_children(&self) -> usize {
        self.children.len()
    }

    pub fn parent_of(&self, child: usize) -> usize {
        self.children[child].parent
    }

    pub fn children_of(&self, parent: usize) -> &[usize] {
        &self.children_by_parent[parent]
    }
}

/// A matching plus the utilities it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub matching: Matching,
    pub utilities: Vec<f64>,
}

impl GameState {
    /// Potential: the sum of indicator-masked desirabilities over children.
    pub fn potential(&self) -> f64 {
        self.utilities.iter().sum()
    }

    /// Social welfare: each parent enters once, at the weighted average of
    /// its children's masked rates over its held RBs.
    pub fn welfare(&self, ctx: &GameContext) -> f64 {
        (0..ctx.cfg.num_ops)
            .map(|parent| {
                let kids = ctx.children_of(parent);
                let held = self.matching.rbs_held(kids).len();
                if held == 0 {
                    return 0.0;
                }
                let sum: f64 = kids.iter().map(|&c| self.utilities[c]).sum();
                ctx.cfg.op_weights[parent] * sum / held as f64
            })
            .sum()
    }

    /// Per-parent welfare inputs (Eq.-7 shape) for reporting and oracles.
    pub fn parent_welfare_inputs(&self, ctx: &GameContext) -> Vec<ParentWelfare> {
        (0..ctx.cfg.num_ops)
            .map(|parent| {
                let kids = ctx.children_of(parent);
                ParentWelfare {
                    weight: ctx.cfg.op_weights[parent],
                    child_utilities: kids.iter().map(|&c| self.utilities[c]).collect(),
                    rbs_held: self.matching.rbs_held(&kids).len(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CacheKey {
    Sim(desirability::SimKey),
    Count(u16, u16),
}

/// The game engine: desirability cache plus the swap/stability machinery.
pub struct Game<'a> {
    pub ctx: &'a GameContext<'a>,
    cache: HashMap<CacheKey, f64>,
}

impl<'a> Game<'a> {
    pub fn new(ctx: &'a GameContext<'a>) -> Game<'a> {
        Game {
            ctx,
            cache: HashMap::new(),
        }
    }

    /// Distinct RBs held by `parent` under `m`, with `moved` optionally
    /// overriding one child's placement (hypothetical evaluations).
    /// Capped-buffer scan; config validation bounds quotas at 7.
    fn held_count(&self, m: &Matching, parent: usize, moved: Option<(usize, usize)>) -> usize {
        let mut seen = [usize::MAX; 8];
        let mut n = 0;
        for &c in self.ctx.children_of(parent) {
            let rb = match moved {
                Some((mc, mrb)) if mc == c => mrb,
                _ => m.rb_of(c),
            };
            if !seen[..n].contains(&rb) {
                seen[n] = rb;
                n += 1;
            }
        }
        n
    }

    /// Desirability of `rb` for `child` under matching `m` (externality:
    /// the value depends on the RB's co-occupants and on how thinly every
    /// involved operator spreads over its held RBs). The child itself is
    /// placed on `rb`; other assignments are read from `m`.
    pub fn desirability(&mut self, m: &Matching, child: usize, rb: usize) -> f64 {
        let parent = self.ctx.parent_of(child);
        let key = match self.ctx.cfg.desirability {
            DesirabilityKind::Simulated => {
                let own_held = self.held_count(m, parent, Some((child, rb)));
                let mut co_parents = [(0usize, 0usize); 32];
                let mut n_co = 0;
                for &p in m.players_on(rb) {
                    if p == child || m.is_vacancy(p) {
                        continue;
                    }
                    let pp = self.ctx.parent_of(p);
                    if pp != parent && !co_parents[..n_co].iter().any(|&(q, _)| q == pp) {
                        co_parents[n_co] = (pp, self.held_count(m, pp, None));
                        n_co += 1;
                    }
                }
                co_parents[..n_co].sort_unstable();
                CacheKey::Sim(desirability::sim_key(
                    self.ctx,
                    parent,
                    own_held,
                    &co_parents[..n_co],
                ))
            }
            DesirabilityKind::CountAnalytic => {
                let n_co = m
                    .players_on(rb)
                    .iter()
                    .filter(|&&p| p != child && !m.is_vacancy(p))
                    .count();
                CacheKey::Count(parent as u16, n_co as u16)
            }
        };
        if let Some(&d) = self.cache.get(&key) {
            return d;
        }
        let d = match key {
            CacheKey::Sim(k) => desirability::eval_simulated(self.ctx, k),
            CacheKey::Count(p, n) => desirability::eval_count(self.ctx, p as usize, n as usize),
        };
        self.cache.insert(key, d);
        d
    }

    /// Utility under `m` with `child` (hypothetically) on `rb`: the
    /// desirability masked by the sibling-collision indicator.
    pub fn utility_on(&mut self, m: &Matching, child: usize, rb: usize) -> f64 {
        let parent = self.ctx.parent_of(child);
        let collided = m
            .players_on(rb)
            .iter()
            .any(|&c| c != child && !m.is_vacancy(c) && self.ctx.parent_of(c) == parent);
        if collided {
            return 0.0;
        }
        self.desirability(m, child, rb)
    }

    fn utility_in(&mut self, m: &Matching, child: usize) -> f64 {
        self.utility_on(m, child, m.rb_of(child))
    }

    pub fn build_state(&mut self, matching: Matching) -> GameState {
        let utilities = (0..matching.num_children())
            .map(|c| self.utility_in(&matching, c))
            .collect();
        GameState {
            matching,
            utilities,
        }
    }

    /// Exchange two players and refresh every child utility (a swap can
    /// shift a parent's held-RB count, which reaches beyond the two RBs).
    /// Swapping a player with itself is a no-op; the operation is its own
    /// inverse.
    pub fn apply_swap(&mut self, state: &mut GameState, a: usize, b: usize) {
        if a == b || state.matching.rb_of(a) == state.matching.rb_of(b) {
            return;
        }
        state.matching.swap(a, b);
        for c in 0..state.matching.num_children() {
            state.utilities[c] = self.utility_in(&state.matching, c);
        }
        debug_assert!(state
            .matching
            .validate(
                &self.ctx.cfg.rb_capacity,
                &self.ctx.cfg.rb_quota,
                &self.ctx.children
            )
            .is_ok());
    }

    /// Two-sided exchange approval: both swapped players weakly improve and
    /// at least one strictly improves. Vacancies always hold utility 0, so a
    /// move into spare capacity is approved exactly when the mover strictly
    /// gains.
    pub fn is_approved_swap(&mut self, state: &mut GameState, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let ra = state.matching.rb_of(a);
        let rb = state.matching.rb_of(b);
        if ra == rb {
            return false;
        }
        let old_a = if state.matching.is_vacancy(a) {
            0.0
        } else {
            state.utilities[a]
        };
        let old_b = if state.matching.is_vacancy(b) {
            0.0
        } else {
            state.utilities[b]
        };
        // evaluate the movers inside the swapped matching, then restore
        state.matching.swap(a, b);
        let new_a = if state.matching.is_vacancy(a) {
            0.0
        } else {
            self.utility_in(&state.matching, a)
        };
        let new_b = if state.matching.is_vacancy(b) {
            0.0
        } else {
            self.utility_in(&state.matching, b)
        };
        state.matching.swap(a, b);
        new_a >= old_a && new_b >= old_b && (new_a > old_a || new_b > old_b)
    }

    /// No approved swap exists over any pair of players (vacancies included).
    pub fn is_pairwise_stable(&mut self, state: &mut GameState) -> bool {
        let n = state.matching.num_players();
        for a in 0..n {
            for b in (a + 1)..n {
                if self.is_approved_swap(state, a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Rate breakdown of the current state: per-SBS averages over the
    /// parent's held RBs, child and parent operator rates, and welfare.
    pub fn rate_report(&mut self, state: &GameState) -> RateReport {
        let ctx = self.ctx;
        let m = &state.matching;
        let num_sbs = ctx.dep.num_sbs();
        let mut per_sbs_rate = vec![0.0; num_sbs];
        let mut per_parent = Vec::with_capacity(ctx.cfg.num_ops);
        for parent in 0..ctx.cfg.num_ops {
            let kids = ctx.children_of(parent);
            let held = m.rbs_held(&kids);
            for (i, &f) in ctx.parent_sbs[parent].iter().enumerate() {
                per_sbs_rate[f] = rates::sbs_avg_rate(&held, |l| {
                    desirability::per_sbs_rates_on(self.ctx, m, parent, l)[i]
                });
            }
            let child_utils: Vec<f64> = kids.iter().map(|&c| state.utilities[c]).collect();
            per_parent.push(rates::parent_op_rate(&child_utils, held.len()));
        }
        let per_child_op_rate = (0..ctx.num_children())
            .map(|c| self.desirability(m, c, m.rb_of(c)))
            .collect();
        RateReport {
            per_sbs_rate,
            per_child_op_rate,
            per_parent_op_rate: per_parent,
            social_welfare: rates::social_welfare(&state.parent_welfare_inputs(ctx)),
        }
    }
}
