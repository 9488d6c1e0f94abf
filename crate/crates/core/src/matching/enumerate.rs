//! Exhaustive enumeration of every feasible matching on small instances:
//! the optimality and stability oracle behind the solver test suites.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Game, GameState, Matching};

#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub children_rb: Vec<usize>,
    pub utilities: Vec<f64>,
    pub potential: f64,
    pub welfare: f64,
    pub local_max_potential: bool,
    pub local_max_welfare: bool,
    pub pairwise_stable: bool,
    pub collision_free: bool,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    pub entries: Vec<LedgerEntry>,
    pub best_welfare_idx: usize,
    pub best_potential_idx: usize,
}

impl Ledger {
    pub fn best_welfare(&self) -> &LedgerEntry {
        &self.entries[self.best_welfare_idx]
    }

    pub fn best_potential(&self) -> &LedgerEntry {
        &self.entries[self.best_potential_idx]
    }
}

const MAX_CHILDREN: usize = 6;
const MAX_RBS: usize = 4;

/// Enumerate all feasible matchings (complete child -> RB assignments in
/// lexicographic order), tag each with local-maximality of the potential
/// and the welfare plus pairwise stability, and return the welfare-optimal
/// state. Ties are broken toward the lexicographically smallest assignment.
pub fn enumerate_optimal(game: &mut Game) -> Result<(GameState, Ledger)> {
    let cfg = game.ctx.cfg;
    let num_children = game.ctx.num_children();
    if num_children > MAX_CHILDREN || cfg.num_rbs > MAX_RBS {
        return Err(Error::TooLarge(format!(
            "{num_children} children / {} RBs exceeds the {MAX_CHILDREN}-child / {MAX_RBS}-RB bound",
            cfg.num_rbs
        )));
    }
    let capacities = cfg.rb_capacity.clone();

    let mut assignments = Vec::new();
    let mut current = vec![0usize; num_children];
    let mut remaining = capacities.clone();
    enumerate_rec(
        0,
        num_children,
        &mut current,
        &mut remaining,
        &mut assignments,
    );

    let mut entries = Vec::with_capacity(assignments.len());
    let mut index_of: HashMap<Vec<usize>, usize> = HashMap::with_capacity(assignments.len());
    for v in &assignments {
        let matching = Matching::from_child_assignment(v, &capacities)?;
        let state = game.build_state(matching);
        let collision_free = (0..num_children).all(|c| {
            let rb = state.matching.rb_of(c);
            state
                .matching
                .children_on(rb)
                .iter()
                .all(|&o| o == c || game.ctx.parent_of(o) != game.ctx.parent_of(c))
        });
        index_of.insert(v.clone(), entries.len());
        entries.push(LedgerEntry {
            children_rb: v.clone(),
            potential: state.potential(),
            welfare: state.welfare(game.ctx),
            utilities: state.utilities,
            local_max_potential: true,
            local_max_welfare: true,
            pairwise_stable: true,
            collision_free,
        });
    }

    // Neighbor analysis: every swap neighbor is itself an enumerated
    // assignment, so the comparison uses identical float paths.
    for i in 0..entries.len() {
        let v = entries[i].children_rb.clone();
        let mut counts = vec![0usize; capacities.len()];
        for &rb in &v {
            counts[rb] += 1;
        }
        let mut local_max_phi = true;
        let mut local_max_s = true;
        let mut stable = true;
        let mut visit = |neighbor: &[usize], movers: &[usize], entries: &Vec<LedgerEntry>| {
            let j = index_of[neighbor];
            if entries[j].potential > entries[i].potential {
                local_max_phi = false;
            }
            if entries[j].welfare > entries[i].welfare {
                local_max_s = false;
            }
            let mut weak = true;
            let mut strict = false;
            for &c in movers {
                let old = entries[i].utilities[c];
                let new = entries[j].utilities[c];
                if new < old {
                    weak = false;
                }
                if new > old {
                    strict = true;
                }
            }
            if weak && strict {
                stable = false;
            }
        };
        for c1 in 0..num_children {
            // exchange with another child on a different RB
            for c2 in (c1 + 1)..num_children {
                if v[c1] == v[c2] {
                    continue;
                }
                let mut n = v.clone();
                n.swap(c1, c2);
                visit(&n, &[c1, c2], &entries);
            }
            // move into spare capacity (a swap with a vacancy player)
            for rb_t in 0..capacities.len() {
                if rb_t == v[c1] || counts[rb_t] >= capacities[rb_t] {
                    continue;
                }
                let mut n = v.clone();
                n[c1] = rb_t;
                visit(&n, &[c1], &entries);
            }
        }
        entries[i].local_max_potential = local_max_phi;
        entries[i].local_max_welfare = local_max_s;
        entries[i].pairwise_stable = stable;
    }

    let mut best_welfare_idx = 0;
    let mut best_potential_idx = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.welfare > entries[best_welfare_idx].welfare {
            best_welfare_idx = i;
        }
        if e.potential > entries[best_potential_idx].potential {
            best_potential_idx = i;
        }
    }

    let best =
        Matching::from_child_assignment(&entries[best_welfare_idx].children_rb, &capacities)?;
    let state = game.build_state(best);
    Ok((
        state,
        Ledger {
            entries,
            best_welfare_idx,
            best_potential_idx,
        },
    ))
}

fn enumerate_rec(
    child: usize,
    num_children: usize,
    current: &mut Vec<usize>,
    remaining: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if child == num_children {
        out.push(current.clone());
        return;
    }
    for rb in 0..remaining.len() {
        if remaining[rb] == 0 {
            continue;
        }
        remaining[rb] -= 1;
        current[child] = rb;
        enumerate_rec(child + 1, num_children, current, remaining, out);
        remaining[rb] += 1;
    }
}
