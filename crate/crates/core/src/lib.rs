//! Desk-scale simulator for two-level spectrum sharing among network
//! operators: resource blocks are matched to operators by a many-to-one
//! matching game with externalities (greedy swap or MCMC search, with an
//! exhaustive stability oracle), and each small cell picks its transmit
//! power by Q-learning. Deployments are random point patterns in a square;
//! rates follow a log-distance pathloss model with shadowing and Rayleigh
//! fading, validated against an analytic expected-rate integral.

pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod learning;
pub mod matching;
pub mod power;
pub mod rates;
pub mod rng;

pub use config::{DesirabilityKind, PowerMode, SimConfig, SolverKind};
pub use error::{Error, Result};
