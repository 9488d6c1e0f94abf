//! Experiment configuration: every tunable of the simulator, a flat
//! `section.key = value` file format, validation, and the one-time
//! dB/dBm -> linear conversion (downstream code only ever sees watts
//! and linear ratios through [`RadioParams`]).

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Greedy,
    Mcmc,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Greedy => "greedy",
            SolverKind::Mcmc => "mcmc",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(SolverKind::Greedy),
            "mcmc" => Ok(SolverKind::Mcmc),
            other => Err(Error::config(format!(
                "unknown solver kind '{other}' (expected greedy|mcmc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    Uniform,
    Full,
    QLearning,
}

impl PowerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerMode::Uniform => "uniform",
            PowerMode::Full => "full",
            PowerMode::QLearning => "qlearning",
        }
    }
}

impl std::str::FromStr for PowerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PowerMode::Uniform),
            "full" => Ok(PowerMode::Full),
            "qlearning" => Ok(PowerMode::QLearning),
            other => Err(Error::config(format!(
                "unknown power mode '{other}' (expected uniform|full|qlearning)"
            ))),
        }
    }
}

/// How RB desirabilities are evaluated inside the matching game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesirabilityKind {
    /// Monte Carlo over fades and power draws on the realized deployment.
    Simulated,
    /// Interference-count-only analytic rate (quadrature of the expected-rate
    /// integral). Used by the stability suites; no geometry externalities.
    CountAnalytic,
}

impl DesirabilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesirabilityKind::Simulated => "simulated",
            DesirabilityKind::CountAnalytic => "count_analytic",
        }
    }
}

impl std::str::FromStr for DesirabilityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulated" => Ok(DesirabilityKind::Simulated),
            "count_analytic" => Ok(DesirabilityKind::CountAnalytic),
            other => Err(Error::config(format!(
                "unknown desirability model '{other}' (expected simulated|count_analytic)"
            ))),
        }
    }
}

/// Full experiment configuration. Radio-frequency quantities are stored in
/// the dB/dBm units they are quoted in; [`SimConfig::radio`] converts them
/// to linear units exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    // geometry (deployment + propagation)
    pub area_side: f64,
    pub num_ops: usize,
    pub sbs_per_op: usize,
    pub ue_max_dist: f64,
    pub pl_const_db: f64,
    pub pl_slope_db: f64,
    pub alpha: f64,
    pub wall_loss_db: f64,
    pub wall_loss_enabled: bool,
    pub shadow_sigma_db: f64,
    pub noise_dbm: f64,
    pub p_tot_dbm: f64,
    pub num_power_levels: usize,
    pub sinr_th_db: f64,
    // game
    pub num_rbs: usize,
    pub rb_capacity: Vec<usize>,
    pub rb_quota: Vec<usize>,
    pub op_weights: Vec<f64>,
    pub sbs_weight: f64,
    pub rate_draws: usize,
    pub desirability: DesirabilityKind,
    // learning
    pub gamma: f64,
    pub lr: f64,
    pub lr_decay: f64,
    pub temp_tp: f64,
    pub temp_decay: f64,
    pub episodes: usize,
    // solver
    pub solver: SolverKind,
    pub max_iterations: Option<usize>,
    pub temp_tb: f64,
    // run
    pub power_mode: PowerMode,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            area_side: 20.0,
            num_ops: 3,
            sbs_per_op: 1,
            ue_max_dist: 5.0,
            pl_const_db: 37.0,
            pl_slope_db: 20.0,
            alpha: 2.0,
            wall_loss_db: 15.0,
            wall_loss_enabled: true,
            shadow_sigma_db: 4.0,
            noise_dbm: -120.0,
            p_tot_dbm: 10.0,
            num_power_levels: 10,
            sinr_th_db: 3.0,
            num_rbs: 5,
            rb_capacity: vec![4, 4, 4, 4, 4],
            rb_quota: vec![2, 3, 4],
            op_weights: vec![1.0, 1.0, 1.0],
            sbs_weight: 1.0,
            rate_draws: 32,
            desirability: DesirabilityKind::Simulated,
            gamma: 0.5,
            lr: 0.1,
            lr_decay: 0.1,
            temp_tp: 20.0,
            temp_decay: 0.02,
            episodes: 500,
            solver: SolverKind::Mcmc,
            max_iterations: None,
            temp_tb: 1.0,
            power_mode: PowerMode::Full,
            samples: 2500,
            seed: 1,
            workers: 0,
        }
    }
}

/// Minimum link distance; the pathloss formula is clamped here.
pub const MIN_DISTANCE_M: f64 = 0.1;

/// Default solver iteration budgets when `solver.max_iterations` is unset.
pub const GREEDY_DEFAULT_ITERS: usize = 2000;
pub const MCMC_DEFAULT_ITERS: usize = 5000;

/// Linear-unit view of the radio quantities, derived once at validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub noise_w: f64,
    pub p_tot_w: f64,
    pub delta_w: f64,
    pub sinr_th: f64,
    /// Power of level n (1-based) is `power_levels_w[n-1] = n * delta_w`.
    pub power_levels_w: Vec<f64>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl SimConfig {
    /// Convert the dB/dBm fields to linear units. Call once per run; all
    /// downstream power arithmetic uses the returned struct.
    pub fn radio(&self) -> RadioParams {
        let p_tot_w = dbm_to_watts(self.p_tot_dbm);
        let n = self.num_power_levels;
        let delta_w = p_tot_w / n as f64;
        RadioParams {
            noise_w: dbm_to_watts(self.noise_dbm),
            p_tot_w,
            delta_w,
            sinr_th: db_to_linear(self.sinr_th_db),
            power_levels_w: (1..=n).map(|i| i as f64 * delta_w).collect(),
        }
    }

    pub fn effective_max_iterations(&self) -> usize {
        self.max_iterations.unwrap_or(match self.solver {
            SolverKind::Greedy => GREEDY_DEFAULT_ITERS,
            SolverKind::Mcmc => MCMC_DEFAULT_ITERS,
        })
    }

    pub fn total_quota(&self) -> usize {
        self.rb_quota.iter().sum()
    }

    pub fn total_capacity(&self) -> usize {
        self.rb_capacity.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(Error::config("geometry.area_side must be positive"));
        }
        if self.num_ops == 0 {
            return Err(Error::config("geometry.num_ops must be >= 1"));
        }
        if self.sbs_per_op == 0 {
            return Err(Error::config("geometry.sbs_per_op must be >= 1"));
        }
        if !(self.ue_max_dist > 0.0) {
            return Err(Error::config("geometry.ue_max_dist must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("geometry.alpha must be positive"));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(Error::config("geometry.shadow_sigma_db must be >= 0"));
        }
        if self.num_power_levels == 0 {
            return Err(Error::config("geometry.num_power_levels must be >= 1"));
        }
        if self.num_rbs == 0 {
            return Err(Error::config("game.num_rbs must be >= 1"));
        }
        if self.rb_capacity.len() != self.num_rbs {
            return Err(Error::config(format!(
                "game.rb_capacity has {} entries but game.num_rbs = {}",
                self.rb_capacity.len(),
                self.num_rbs
            )));
        }
        if self.rb_capacity.iter().any(|&b| b == 0) {
            return Err(Error::config("every RB capacity must be >= 1"));
        }
        if self.rb_quota.len() != self.num_ops {
            return Err(Error::config(format!(
                "game.rb_quota has {} entries but geometry.num_ops = {}",
                self.rb_quota.len(),
                self.num_ops
            )));
        }
        if self.rb_quota.iter().any(|&c| c == 0) {
            return Err(Error::config("every RB quota must be >= 1"));
        }
        if self.rb_quota.iter().any(|&c| c > 7) {
            return Err(Error::config("RB quotas above 7 are not supported"));
        }
        if self.num_ops > 21 {
            return Err(Error::config("operator counts above 21 are not supported"));
        }
        if self.op_weights.len() != self.num_ops {
            return Err(Error::config(format!(
                "game.op_weights has {} entries but geometry.num_ops = {}",
                self.op_weights.len(),
                self.num_ops
            )));
        }
        if self
            .op_weights
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
        {
            return Err(Error::config("operator weights must be finite and >= 0"));
        }
        if !(self.sbs_weight >= 0.0) || !self.sbs_weight.is_finite() {
            return Err(Error::config("game.sbs_weight must be finite and >= 0"));
        }
        if self.rate_draws == 0 {
            return Err(Error::config("game.rate_draws must be >= 1"));
        }
        if self.total_capacity() < self.total_quota() {
            return Err(Error::infeasible(format!(
                "total RB capacity {} < total quota {}",
                self.total_capacity(),
                self.total_quota()
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("learning.gamma must be in [0, 1)"));
        }
        if !(self.lr > 0.0 && self.lr <= 1.0) {
            return Err(Error::config("learning.lr must be in (0, 1]"));
        }
        if self.lr_decay < 0.0 {
            return Err(Error::config("learning.lr_decay must be >= 0"));
        }
        if !(self.temp_tp > 0.0) {
            return Err(Error::config("learning.temp must be > 0"));
        }
        if self.temp_decay < 0.0 {
            return Err(Error::config("learning.temp_decay must be >= 0"));
        }
        if !(self.temp_tb > 0.0) {
            return Err(Error::config("solver.temp must be > 0"));
        }
        if self.samples == 0 {
            return Err(Error::config("samples must be >= 1"));
        }
        let radio = self.radio();
        let rel =
            (radio.delta_w * self.num_power_levels as f64 - radio.p_tot_w).abs() / radio.p_tot_w;
        if rel > 1e-9 {
            return Err(Error::config("power quantum does not reproduce p_tot"));
        }
        Ok(())
    }

    /// Parse a flat `section.key = value` config file. `#` starts a comment,
    /// blank lines are ignored, keys are order-insensitive, later entries
    /// override earlier ones. Unknown keys are errors.
    pub fn from_str_cfg(text: &str) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        let mut quota_set = false;
        let mut weights_set = false;
        let mut capacity_scalar: Option<usize> = None;
        let mut capacity_list: Option<Vec<usize>> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {}: expected key = value, got '{line}'",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            let err =
                |what: &str| Error::config(format!("line {}: {what} for key '{key}'", lineno + 1));

            macro_rules! parse {
                ($ty:ty) => {
                    value.parse::<$ty>().map_err(|_| err("invalid value"))?
                };
            }

            match key {
                "geometry.area_side" => cfg.area_side = parse!(f64),
                "geometry.num_ops" => cfg.num_ops = parse!(usize),
                "geometry.sbs_per_op" => cfg.sbs_per_op = parse!(usize),
                "geometry.ue_max_dist" => cfg.ue_max_dist = parse!(f64),
                "geometry.pl_const_db" => cfg.pl_const_db = parse!(f64),
                "geometry.pl_slope_db" => cfg.pl_slope_db = parse!(f64),
                "geometry.alpha" => cfg.alpha = parse!(f64),
                "geometry.wall_loss_db" => cfg.wall_loss_db = parse!(f64),
                "geometry.wall_loss_enabled" => {
                    cfg.wall_loss_enabled = parse_bool(value).ok_or_else(|| err("invalid bool"))?
                }
                "geometry.shadow_sigma_db" => cfg.shadow_sigma_db = parse!(f64),
                "geometry.noise_dbm" => cfg.noise_dbm = parse!(f64),
                "geometry.p_tot_dbm" => cfg.p_tot_dbm = parse!(f64),
                "geometry.num_power_levels" => cfg.num_power_levels = parse!(usize),
                "geometry.sinr_th_db" => cfg.sinr_th_db = parse!(f64),
                "game.num_rbs" => cfg.num_rbs = parse!(usize),
                "game.rb_capacity" => {
                    let list = parse_usize_list(value).map_err(|_| err("invalid count list"))?;
                    if list.len() == 1 {
                        capacity_scalar = Some(list[0]);
                        capacity_list = None;
                    } else {
                        capacity_list = Some(list);
                        capacity_scalar = None;
                    }
                }
                "game.rb_quota" => {
                    cfg.rb_quota =
                        parse_usize_list(value).map_err(|_| err("invalid count list"))?;
                    quota_set = true;
                }
                "game.op_weights" => {
                    cfg.op_weights =
                        parse_f64_list(value).map_err(|_| err("invalid number list"))?;
                    weights_set = true;
                }
                "game.sbs_weight" => cfg.sbs_weight = parse!(f64),
                "game.rate_draws" => cfg.rate_draws = parse!(usize),
                "game.desirability" => cfg.desirability = value.parse()?,
                "learning.gamma" => cfg.gamma = parse!(f64),
                "learning.lr" => cfg.lr = parse!(f64),
                "learning.lr_decay" => cfg.lr_decay = parse!(f64),
                "learning.temp" => cfg.temp_tp = parse!(f64),
                "learning.temp_decay" => cfg.temp_decay = parse!(f64),
                "learning.episodes" => cfg.episodes = parse!(usize),
                "solver.kind" => cfg.solver = value.parse()?,
                "solver.max_iterations" => cfg.max_iterations = Some(parse!(usize)),
                "solver.temp" => cfg.temp_tb = parse!(f64),
                "power_mode" => cfg.power_mode = value.parse()?,
                "samples" => cfg.samples = parse!(usize),
                "seed" => cfg.seed = parse!(u64),
                "workers" => cfg.workers = parse!(usize),
                other => {
                    return Err(Error::config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }

        // Broadcast scalars once the grid sizes are known.
        cfg.rb_capacity = match (capacity_list, capacity_scalar) {
            (Some(list), _) => list,
            (None, Some(b)) => vec![b; cfg.num_rbs],
            (None, None) => vec![4; cfg.num_rbs],
        };
        if !quota_set {
            cfg.rb_quota = default_quota(cfg.num_ops);
        }
        if weights_set {
            if cfg.op_weights.len() == 1 {
                cfg.op_weights = vec![cfg.op_weights[0]; cfg.num_ops];
            }
        } else {
            cfg.op_weights = vec![1.0; cfg.num_ops];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<SimConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimConfig::from_str_cfg(&text)
    }

    /// Apply a single `section.key = value` override (the CLI and the Python
    /// bindings funnel through this so every field stays scriptable).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut text = self.to_config_string();
        text.push_str(&format!("\n{key} = {value}\n"));
        *self = SimConfig::from_str_cfg(&text)?;
        Ok(())
    }

    /// Canonical serialization: fixed key order, parseable by
    /// [`SimConfig::from_str_cfg`], byte-stable for a given config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("geometry.area_side", fmt_f64(self.area_side));
        kv("geometry.num_ops", self.num_ops.to_string());
        kv("geometry.sbs_per_op", self.sbs_per_op.to_string());
        kv("geometry.ue_max_dist", fmt_f64(self.ue_max_dist));
        kv("geometry.pl_const_db", fmt_f64(self.pl_const_db));
        kv("geometry.pl_slope_db", fmt_f64(self.pl_slope_db));
        kv("geometry.alpha", fmt_f64(self.alpha));
        kv("geometry.wall_loss_db", fmt_f64(self.wall_loss_db));
        kv(
            "geometry.wall_loss_enabled",
            self.wall_loss_enabled.to_string(),
        );
        kv("geometry.shadow_sigma_db", fmt_f64(self.shadow_sigma_db));
        kv("geometry.noise_dbm", fmt_f64(self.noise_dbm));
        kv("geometry.p_tot_dbm", fmt_f64(self.p_tot_dbm));
        kv(
            "geometry.num_power_levels",
            self.num_power_levels.to_string(),
        );
        kv("geometry.sinr_th_db", fmt_f64(self.sinr_th_db));
        kv("game.num_rbs", self.num_rbs.to_string());
        kv("game.rb_capacity", join_usize(&self.rb_capacity));
        kv("game.rb_quota", join_usize(&self.rb_quota));
        kv("game.op_weights", join_f64(&self.op_weights));
        kv("game.sbs_weight", fmt_f64(self.sbs_weight));
        kv("game.rate_draws", self.rate_draws.to_string());
        kv("game.desirability", self.desirability.as_str().to_string());
        kv("learning.gamma", fmt_f64(self.gamma));
        kv("learning.lr", fmt_f64(self.lr));
        kv("learning.lr_decay", fmt_f64(self.lr_decay));
        kv("learning.temp", fmt_f64(self.temp_tp));
        kv("learning.temp_decay", fmt_f64(self.temp_decay));
        kv("learning.episodes", self.episodes.to_string());
        kv("solver.kind", self.solver.as_str().to_string());
        if let Some(it) = self.max_iterations {
            kv("solver.max_iterations", it.to_string());
        }
        kv("solver.temp", fmt_f64(self.temp_tb));
        kv("power_mode", self.power_mode.as_str().to_string());
        kv("samples", self.samples.to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        s
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_string())
    }
}

/// Quota vectors used in the reference experiments, by operator count.
pub fn default_quota(num_ops: usize) -> Vec<usize> {
    match num_ops {
        1 => vec![2],
        2 => vec![2, 3],
        3 => vec![2, 3, 4],
        4 => vec![2, 3, 4, 2],
        5 => vec![2, 3, 4, 2, 2],
        6 => vec![2, 3, 4, 4, 5, 2],
        k => vec![2; k],
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, ()> {
    let v: std::result::Result<Vec<usize>, _> =
        s.split(',').map(|p| p.trim().parse::<usize>()).collect();
    match v {
        Ok(list) if !list.is_empty() => Ok(list),
        _ => Err(()),
    }
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, ()> {
    let v: std::result::Result<Vec<f64>, _> =
        s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match v {
        Ok(list) if !list.is_empty() => Ok(list),
        _ => Err(()),
    }
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip repr; keeps the canonical form stable
    format!("{x}")
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}
