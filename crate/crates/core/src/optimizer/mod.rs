//! Hybrid binary PSO / chemical-reaction optimizer (HBPCRO).
//!
//! A placement is encoded as the bit vector `X` of length `|S|·|F|` with
//! `X[s·|F| + f] = P(s, f)`; the cloud side always follows the release rule.
//! Binary PSO sweeps provide global search, and the on-wall and
//! inter-molecular collision operators provide local search around single
//! particles. Every random draw comes from a per-particle ChaCha stream or
//! the scheduler stream, all derived from [`SwarmConfig::seed`].

mod cro;
mod particle;
mod pso;
mod solver;

pub use cro::{inter_molecular_collision, on_wall_collision, KineticSplit};
pub use particle::{init_swarm, particle_rng, scheduler_rng, GlobalBest, Particle, Problem};
pub use pso::{
    flip_probability, pso_sweep, scheduled_coefficients, sigmoid, spread_inertia, update_position,
    update_position_with, update_velocity, update_velocity_with,
};
pub use solver::{solve, Mode, Solution};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("invalid swarm config: {0}")]
    InvalidConfig(String),
    #[error("inter-molecular collision needs two distinct particles, got {0} twice")]
    SameParticle(usize),
    #[error("particle index {index} out of range for a swarm of {len}")]
    NoSuchParticle { index: usize, len: usize },
}

/// Hyper-parameters of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub n_particles: usize,
    pub max_iter: usize,
    /// Local steps a particle may take before a global sweep.
    pub gamma: u32,
    pub init_ke: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub min_ke_loss_per: f64,
    pub inter_prob: f64,
    pub alpha_i: f64,
    pub alpha_f: f64,
    pub beta_i: f64,
    pub beta_f: f64,
    pub seed: u64,
    /// Swap attempts per collision.
    pub swap_steps: usize,
    /// Inertia used when the swarm has collapsed to a point.
    pub omega_floor: f64,
    /// Pick inter-molecular collisions when `U(0,1) < inter_prob` instead of
    /// `inter_prob < U(0,1)`.
    pub invert_inter_prob: bool,
    /// Stop once the best placement meets every delay and QoS target.
    pub early_exit: bool,
    /// Count every collision a particle takes part in towards `gamma`, not
    /// only the accepted ones.
    pub count_rejected_collisions: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_particles: 35,
            max_iter: 700,
            gamma: 3,
            init_ke: 100_000.0,
            v_min: -0.5,
            v_max: 5.0,
            min_ke_loss_per: 0.1,
            inter_prob: 0.8,
            alpha_i: 0.9,
            alpha_f: 0.5,
            beta_i: 0.5,
            beta_f: 5.5,
            seed: 0,
            swap_steps: 5,
            omega_floor: 0.1,
            invert_inter_prob: false,
            early_exit: true,
            count_rejected_collisions: true,
        }
    }
}

impl SwarmConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::InvalidConfig(m.to_owned()));
        if self.n_particles < 2 {
            return bad("n_particles must be >= 2");
        }
        if !(self.v_min < self.v_max) {
            return bad("v_min must be below v_max");
        }
        for (name, v) in [
            ("min_ke_loss_per", self.min_ke_loss_per),
            ("inter_prob", self.inter_prob),
            ("omega_floor", self.omega_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.init_ke >= 0.0) {
            return bad("init_ke must be >= 0");
        }
        let finite = [self.alpha_i, self.alpha_f, self.beta_i, self.beta_f];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("coefficient schedules must be finite");
        }
        Ok(())
    }
}
