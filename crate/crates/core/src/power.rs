//! Per-SBS transmit-power selection distributions. The matching game's rate
//! evaluations draw interferer powers from these; Q-learning training
//! refreshes them with the empirically selected levels.

use rand::Rng;

use crate::config::RadioParams;

#[derive(Debug, Clone)]
pub struct PowerPolicy {
    /// pmf[f][n-1]: probability that SBS f transmits at level n.
    pub pmf: Vec<Vec<f64>>,
    cum: Vec<Vec<f64>>,
    pub levels_w: Vec<f64>,
    /// Population mean of sqrt(p) across all SBSs (feeds the analytic rate).
    pub mean_sqrt_w: f64,
}

impl PowerPolicy {
    pub fn from_pmfs(pmf: Vec<Vec<f64>>, radio: &RadioParams) -> PowerPolicy {
        let levels_w = radio.power_levels_w.clone();
        let cum = pmf
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        let mean_sqrt_w = if pmf.is_empty() {
            levels_w.last().copied().unwrap_or(0.0).sqrt()
        } else {
            pmf.iter()
                .map(|row| {
                    row.iter()
                        .zip(&levels_w)
                        .map(|(p, w)| p * w.sqrt())
                        .sum::<f64>()
                })
                .sum::<f64>()
                / pmf.len() as f64
        };
        PowerPolicy {
            pmf,
            cum,
            levels_w,
            mean_sqrt_w,
        }
    }

    /// Every level equally likely.
    pub fn uniform(num_sbs: usize, radio: &RadioParams) -> PowerPolicy {
        let n = radio.power_levels_w.len();
        let row = vec![1.0 / n as f64; n];
        PowerPolicy::from_pmfs(vec![row; num_sbs], radio)
    }

    /// Always the maximum level.
    pub fn full(num_sbs: usize, radio: &RadioParams) -> PowerPolicy {
        let n = radio.power_levels_w.len();
        let mut row = vec![0.0; n];
        row[n - 1] = 1.0;
        PowerPolicy::from_pmfs(vec![row; num_sbs], radio)
    }

    /// Starting policy of a power mode: full-power transmits at the top
    /// level, uniform and (untrained) Q-learning draw uniformly.
    pub fn initial(
        mode: crate::config::PowerMode,
        num_sbs: usize,
        radio: &RadioParams,
    ) -> PowerPolicy {
        match mode {
            crate::config::PowerMode::Full => PowerPolicy::full(num_sbs, radio),
            crate::config::PowerMode::Uniform | crate::config::PowerMode::QLearning => {
                PowerPolicy::uniform(num_sbs, radio)
            }
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels_w.len()
    }

    /// Draw a power level index (1-based) for SBS `f`.
    #[inline]
    pub fn sample_level(&self, f: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let cum = &self.cum[f];
        for (i, &c) in cum.iter().enumerate() {
            if u < c {
                return i + 1;
            }
        }
        cum.len()
    }

    #[inline]
    pub fn sample_power_w(&self, f: usize, rng: &mut impl Rng) -> f64 {
        self.levels_w[self.sample_level(f, rng) - 1]
    }

    /// Mean transmit power of SBS `f` under its current distribution.
    pub fn mean_power_w(&self, f: usize) -> f64 {
        self.pmf[f]
            .iter()
            .zip(&self.levels_w)
            .map(|(p, w)| p * w)
            .sum()
    }
}
