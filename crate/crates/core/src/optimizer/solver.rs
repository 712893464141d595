use super::cro::{inter_molecular_collision, on_wall_collision};
use super::particle::{init_swarm, particle_rng, scheduler_rng, GlobalBest, Problem};
use super::pso::pso_sweep;
use super::{OptimizerError, SwarmConfig};
use crate::cost::CostModel;
use crate::model::PlacementState;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Collisions between global sweeps.
    #[default]
    Hybrid,
    /// Every iteration is a global sweep.
    PurePso,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub placement: PlacementState,
    pub cost: f64,
    /// Best cost after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub sweeps: usize,
    pub stopped_early: bool,
}

/// Runs the solver on one snapshot. The returned placement's cloud matrix
/// follows the release rule.
pub fn solve(
    config: &SwarmConfig,
    model: CostModel<'_>,
    mode: Mode,
) -> Result<Solution, OptimizerError> {
    config.validate()?;
    let problem = Problem::new(model);
    let n = config.n_particles;
    let mut rngs: Vec<_> = (0..n).map(|i| particle_rng(config.seed, i)).collect();
    let mut sched = scheduler_rng(config.seed);
    let mut swarm = init_swarm(config, &problem, &mut rngs);
    let mut g_best = GlobalBest::from_swarm(&swarm);

    let mut trace = Vec::with_capacity(config.max_iter);
    let mut sweeps = 0;
    let mut stopped_early = config.early_exit && problem.meets_targets(&g_best.position);
    let mut iterations = 0;

    while !stopped_early && iterations < config.max_iter {
        let it = iterations;
        let p = sched.random_range(0..n);
        let before = g_best.cost;
        if mode == Mode::PurePso || swarm[p].local_thresh > config.gamma {
            pso_sweep(&mut swarm, &mut rngs, &mut g_best, &problem, config, it);
            swarm[p].local_thresh = 0;
            sweeps += 1;
        } else {
            let u = sched.random::<f64>();
            let inter = if config.invert_inter_prob {
                u < config.inter_prob
            } else {
                config.inter_prob < u
            };
            if inter {
                let mut other = sched.random_range(0..n - 1);
                if other >= p {
                    other += 1;
                }
                inter_molecular_collision(
                    &mut swarm,
                    p,
                    other,
                    &mut rngs[p],
                    &problem,
                    config,
                    &mut g_best,
                )?;
            } else {
                on_wall_collision(&mut swarm[p], &mut rngs[p], &problem, config, &mut g_best);
            }
        }
        trace.push(g_best.cost);
        iterations += 1;
        if config.early_exit && g_best.cost < before {
            stopped_early = problem.meets_targets(&g_best.position);
        }
    }

    Ok(Solution {
        placement: problem.placement(&g_best.position),
        cost: g_best.cost,
        trace,
        iterations,
        sweeps,
        stopped_early,
    })
}
