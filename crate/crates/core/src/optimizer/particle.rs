use super::SwarmConfig;
use crate::cost::{is_feasible_fog, repair_fog_matrix, CostModel};
use crate::delay::{path_delay_ms, path_violation, request_path};
use crate::matrix::Matrix;
use crate::model::{PlacementState, Topology};
use crate::traffic::TrafficSnapshot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream 0 drives the solver's own choices.
pub fn scheduler_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Independent stream of particle `index`.
pub fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// A placement problem seen as a function of bit vectors.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub model: CostModel<'a>,
}

impl<'a> Problem<'a> {
    pub fn new(model: CostModel<'a>) -> Self {
        Self { model }
    }

    pub fn topology(&self) -> &'a Topology {
        self.model.topology
    }

    pub fn snapshot(&self) -> &'a TrafficSnapshot {
        self.model.snapshot
    }

    pub fn dims(&self) -> usize {
        self.topology().dimensions()
    }

    pub fn fog_matrix(&self, position: &[u8]) -> Matrix<u8> {
        let t = self.topology();
        Matrix::from_vec(t.n_services(), t.n_fog(), position.to_vec())
    }

    pub fn placement(&self, position: &[u8]) -> PlacementState {
        self.model.placement_from_position(position)
    }

    pub fn cost(&self, position: &[u8]) -> f64 {
        self.model.position_cost(position)
    }

    pub fn is_feasible(&self, position: &[u8]) -> bool {
        is_feasible_fog(&self.fog_matrix(position), self.snapshot(), self.topology())
    }

    /// Best-fit repair in place. Returns whether the result is feasible.
    pub fn repair(&self, position: &mut [u8]) -> bool {
        let mut fog = self.fog_matrix(position);
        if is_feasible_fog(&fog, self.snapshot(), self.topology()) {
            return true;
        }
        repair_fog_matrix(&mut fog, self.snapshot(), self.topology());
        position.copy_from_slice(fog.as_slice());
        is_feasible_fog(&fog, self.snapshot(), self.topology())
    }

    /// Every pair with traffic meets its QoS level and its delay threshold.
    pub fn meets_targets(&self, position: &[u8]) -> bool {
        if !self.is_feasible(position) {
            return false;
        }
        let placement = self.placement(position);
        let load = self.model.load(&placement);
        let t = self.topology();
        let d_max = self.model.delay.d_max_ms;
        t.services.iter().enumerate().all(|(s, svc)| {
            (0..t.n_fog()).all(|f| {
                if self.snapshot().rate(s, f) <= 0.0 {
                    return true;
                }
                let path = request_path(s, f, &placement, &load, t);
                path_violation(&path, svc.delay_threshold, d_max) <= 1.0 - svc.qos_level
                    && path_delay_ms(&path, d_max) <= svc.delay_threshold
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<u8>,
    pub velocity: Vec<f64>,
    /// Cost of `position` (potential energy).
    pub cost: f64,
    pub p_best_position: Vec<u8>,
    pub p_best_cost: f64,
    pub kinetic_energy: f64,
    pub local_thresh: u32,
}

impl Particle {
    pub fn new(position: Vec<u8>, velocity: Vec<f64>, cost: f64, kinetic_energy: f64) -> Self {
        Self {
            p_best_position: position.clone(),
            p_best_cost: cost,
            position,
            velocity,
            cost,
            kinetic_energy,
            local_thresh: 0,
        }
    }

    /// Moves to `position` and refreshes the personal best.
    pub fn relocate(&mut self, position: Vec<u8>, cost: f64) {
        if cost < self.p_best_cost {
            self.p_best_position.clone_from(&position);
            self.p_best_cost = cost;
        }
        self.position = position;
        self.cost = cost;
    }
}

/// Swarm-wide best position (`X_opt`).
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBest {
    pub position: Vec<u8>,
    pub cost: f64,
}

impl GlobalBest {
    pub fn from_swarm(swarm: &[Particle]) -> Self {
        let best = swarm
            .iter()
            .min_by(|a, b| a.p_best_cost.total_cmp(&b.p_best_cost))
            .expect("non-empty swarm");
        Self {
            position: best.p_best_position.clone(),
            cost: best.p_best_cost,
        }
    }

    /// Takes `position` if it is strictly better. Returns whether it did.
    pub fn offer(&mut self, position: &[u8], cost: f64) -> bool {
        if cost < self.cost {
            self.position.clear();
            self.position.extend_from_slice(position);
            self.cost = cost;
            true
        } else {
            false
        }
    }
}

/// Random repaired positions, uniform velocities, and `p_best` set to the
/// starting point with its real cost.
pub fn init_swarm(
    config: &SwarmConfig,
    problem: &Problem<'_>,
    rngs: &mut [ChaCha8Rng],
) -> Vec<Particle> {
    let dims = problem.dims();
    rngs.iter_mut()
        .take(config.n_particles)
        .map(|rng| {
            let mut position: Vec<u8> = (0..dims).map(|_| u8::from(rng.random_bool(0.5))).collect();
            let velocity = (0..dims)
                .map(|_| rng.random_range(config.v_min..=config.v_max))
                .collect();
            problem.repair(&mut position);
            let cost = problem.cost(&position);
            Particle::new(position, velocity, cost, config.init_ke)
        })
        .collect()
}
