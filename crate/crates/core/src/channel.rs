//! Spatial deployment sampling and the propagation model: uniform SBS/UE
//! placement, log-distance pathloss with static log-normal shadowing, and
//! per-draw Rayleigh power fading.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RadioParams, SimConfig, MIN_DISTANCE_M};
use crate::error::Result;
use crate::rng::exp1;

#[derive(Debug, Clone, PartialEq)]
pub struct Sbs {
    pub id: usize,
    pub op: usize,
    pub pos: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ue {
    pub sbs: usize,
    pub pos: (f64, f64),
}

/// One sampled network realization: SBS and UE positions plus the static
/// (per-deployment) shadowing of every SBS -> UE link.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub sbs: Vec<Sbs>,
    pub ue: Vec<Ue>,
    /// shadow_db[f'][f]: shadowing on the link from SBS f' to UE f, in dB.
    pub shadow_db: Vec<Vec<f64>>,
}

impl Deployment {
    pub fn num_sbs(&self) -> usize {
        self.sbs.len()
    }

    /// Distance from SBS `from` to the UE served by SBS `to`, clamped below.
    pub fn link_distance(&self, from: usize, to: usize) -> f64 {
        let (x1, y1) = self.sbs[from].pos;
        let (x2, y2) = self.ue[to].pos;
        ((x1 - x2).powi(2) + (y1 - y2).powi(2))
            .sqrt()
            .max(MIN_DISTANCE_M)
    }

    /// SBSs owned by operator `op`, in id order.
    pub fn sbs_of_op(&self, op: usize) -> Vec<usize> {
        self.sbs
            .iter()
            .filter(|s| s.op == op)
            .map(|s| s.id)
            .collect()
    }
}

/// Pathloss in dB at distance `d` meters (clamped at [`MIN_DISTANCE_M`]).
pub fn pathloss_db(d: f64, cfg: &SimConfig) -> f64 {
    let d = d.max(MIN_DISTANCE_M);
    cfg.pl_const_db + cfg.pl_slope_db * d.log10()
}

/// Mean (fade-free) linear power gain of the link SBS `from` -> UE `to`:
/// pathloss, static shadowing, and the optional inter-operator wall loss.
pub fn mean_link_gain(dep: &Deployment, from: usize, to: usize, cfg: &SimConfig) -> f64 {
    let mut loss_db = pathloss_db(dep.link_distance(from, to), cfg) + dep.shadow_db[from][to];
    if cfg.wall_loss_enabled && dep.sbs[from].op != dep.sbs[to].op {
        loss_db += cfg.wall_loss_db;
    }
    10f64.powf(-loss_db / 10.0)
}

/// Precomputed mean-gain matrix; the hot Monte Carlo paths multiply these
/// by fresh unit-mean exponential fades.
#[derive(Debug, Clone)]
pub struct LinkGains {
    pub gain: Vec<Vec<f64>>,
}

impl LinkGains {
    pub fn new(dep: &Deployment, cfg: &SimConfig) -> LinkGains {
        let n = dep.num_sbs();
        let gain = (0..n)
            .map(|from| {
                (0..n)
                    .map(|to| mean_link_gain(dep, from, to, cfg))
                    .collect()
            })
            .collect();
        LinkGains { gain }
    }
}

/// A single fading realization of every SBS -> UE link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// h[f'][f]: linear power gain from SBS f' to UE f (pathloss, shadowing
    /// and a fresh Rayleigh power fade).
    pub h: Vec<Vec<f64>>,
}

/// Sample a deployment: per operator, `sbs_per_op` SBS positions uniform
/// i.i.d. in the square (the point process conditioned on its count), one
/// UE per SBS uniform in the disk of radius `ue_max_dist` intersected with
/// the square, and a static shadowing draw per link.
pub fn sample_deployment(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Deployment> {
    cfg.validate()?;
    let side = cfg.area_side;
    let mut sbs = Vec::with_capacity(cfg.num_ops * cfg.sbs_per_op);
    for op in 0..cfg.num_ops {
        for _ in 0..cfg.sbs_per_op {
            let id = sbs.len();
            let pos = (rng.gen::<f64>() * side, rng.gen::<f64>() * side);
            sbs.push(Sbs { id, op, pos });
        }
    }
    let mut ue = Vec::with_capacity(sbs.len());
    for s in &sbs {
        ue.push(Ue {
            sbs: s.id,
            pos: sample_in_disk_clipped(s.pos, cfg.ue_max_dist, side, rng),
        });
    }
    let n = sbs.len();
    let mut shadow_db = vec![vec![0.0; n]; n];
    for row in shadow_db.iter_mut() {
        for cell in row.iter_mut() {
            *cell = cfg.shadow_sigma_db * crate::rng::std_normal(rng);
        }
    }
    Ok(Deployment { sbs, ue, shadow_db })
}

fn sample_in_disk_clipped(
    center: (f64, f64),
    radius: f64,
    side: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    for _ in 0..1024 {
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.gen::<f64>();
        let p = (center.0 + r * theta.cos(), center.1 + r * theta.sin());
        if p.0 >= 0.0 && p.0 <= side && p.1 >= 0.0 && p.1 <= side {
            return p;
        }
    }
    // unreachable in practice: the disk center lies inside the square
    (center.0.clamp(0.0, side), center.1.clamp(0.0, side))
}

/// Draw a fresh Rayleigh-faded gain matrix over the deployment.
pub fn draw_channel(dep: &Deployment, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> ChannelDraw {
    let n = dep.num_sbs();
    let h = (0..n)
        .map(|from| {
            (0..n)
                .map(|to| mean_link_gain(dep, from, to, cfg) * exp1(rng))
                .collect()
        })
        .collect();
    ChannelDraw { h }
}

/// SINR of SBS `f`'s UE on RB `l` given the per-SBS transmit powers and the
/// set of SBSs active on that RB.
///
/// Panics if `f` is not active on `l` or `powers[f] <= 0` (usage errors).
pub fn sinr(
    f: usize,
    l: usize,
    powers: &[f64],
    occupancy: &[Vec<usize>],
    ch: &ChannelDraw,
    radio: &RadioParams,
) -> f64 {
    let active = &occupancy[l];
    assert!(active.contains(&f), "SBS {f} is not active on RB {l}");
    assert!(powers[f] > 0.0, "SBS {f} transmit power must be positive");
    let signal = ch.h[f][f] * powers[f];
    let interference: f64 = active
        .iter()
        .filter(|&&fp| fp != f)
        .map(|&fp| ch.h[fp][f] * powers[fp])
        .sum();
    signal / (interference + radio.noise_w)
}
