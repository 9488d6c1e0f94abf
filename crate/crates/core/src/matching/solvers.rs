//! The two matching solvers: greedy application of approved swaps until a
//! two-sided exchange-stable point, and Markov chain Monte Carlo search on
//! the social welfare with sigmoid acceptance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Game, GameState};

/// Result of a solver pass. The trace records (proposal index, welfare)
/// change points: for greedy the welfare after each applied swap, for MCMC
/// the best-seen welfare whenever it improves.
#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub state: GameState,
    pub swaps_applied: usize,
    pub proposals: usize,
    pub trace: Vec<(usize, f64)>,
    /// Potential at the same change points (greedy only; empty for MCMC).
    pub potential_trace: Vec<(usize, f64)>,
    /// Greedy only: the pass ended because no approved swap remained.
    pub exhausted: bool,
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Repeatedly apply a uniformly random approved swap until none exists or
/// the iteration budget is spent. Scanning a freshly shuffled pair list and
/// taking the first approved swap picks uniformly among the approved set
/// and doubles as the exhaustion check.
pub fn greedy_swap(
    game: &mut Game,
    state: GameState,
    rng: &mut ChaCha8Rng,
    max_iterations: usize,
) -> SolverOutcome {
    let mut state = state;
    let mut pairs = all_pairs(state.matching.num_players());
    let mut swaps_applied = 0;
    let mut proposals = 0;
    let mut trace = vec![(0usize, state.welfare(game.ctx))];
    let mut potential_trace = vec![(0usize, state.potential())];
    let mut exhausted = false;
    while swaps_applied < max_iterations {
        for i in (1..pairs.len()).rev() {
            let j = rng.gen_range(0..=i);
            pairs.swap(i, j);
        }
        let mut found = None;
        for &(a, b) in &pairs {
            proposals += 1;
            if game.is_approved_swap(&mut state, a, b) {
                found = Some((a, b));
                break;
            }
        }
        match found {
            Some((a, b)) => {
                game.apply_swap(&mut state, a, b);
                swaps_applied += 1;
                trace.push((proposals, state.welfare(game.ctx)));
                potential_trace.push((proposals, state.potential()));
            }
            None => {
                exhausted = true;
                break;
            }
        }
    }
    SolverOutcome {
        state,
        swaps_applied,
        proposals,
        trace,
        potential_trace,
        exhausted,
    }
}

/// MCMC search: propose a random pair swap each iteration, accept with
/// probability 1 / (1 + exp(-T_b * (S' - S))), and track the best welfare
/// seen over all proposals. Returns the best-seen state.
pub fn mcmc(
    game: &mut Game,
    state: GameState,
    rng: &mut ChaCha8Rng,
    max_iterations: usize,
    temp_tb: f64,
) -> SolverOutcome {
    let mut state = state;
    let num_players = state.matching.num_players();
    let mut s_current = state.welfare(game.ctx);
    if num_players < 2 {
        let trace = vec![(0usize, s_current)];
        return SolverOutcome {
            state,
            swaps_applied: 0,
            proposals: 0,
            trace,
            potential_trace: Vec::new(),
            exhausted: false,
        };
    }
    let mut best = state.clone();
    let mut s_best = s_current;
    let mut swaps_applied = 0;
    let mut trace = vec![(0usize, s_best)];
    for i in 0..max_iterations {
        let a = rng.gen_range(0..num_players);
        let mut b = rng.gen_range(0..num_players - 1);
        if b >= a {
            b += 1;
        }
        let movable = state.matching.rb_of(a) != state.matching.rb_of(b);
        let s_proposed = if movable {
            game.apply_swap(&mut state, a, b);
            state.welfare(game.ctx)
        } else {
            s_current
        };
        if s_proposed > s_best {
            s_best = s_proposed;
            best = state.clone();
            trace.push((i + 1, s_best));
        }
        let p_accept = 1.0 / (1.0 + (-temp_tb * (s_proposed - s_current)).exp());
        let accept = rng.gen::<f64>() < p_accept;
        if movable {
            if accept {
                s_current = s_proposed;
                swaps_applied += 1;
            } else {
                // cached desirabilities restore the exact previous utilities
                game.apply_swap(&mut state, a, b);
            }
        }
    }
    SolverOutcome {
        state: best,
        swaps_applied,
        proposals: max_iterations,
        trace,
        potential_trace: Vec::new(),
        exhausted: false,
    }
}
