use super::particle::{GlobalBest, Particle, Problem};
use super::SwarmConfig;
use crate::cost::constraints::{fog_usage, NodeUsage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SPREAD_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// V-shaped transfer: `|2·(σ(v) − 0.5)|`.
#[inline]
pub fn flip_probability(v: f64) -> f64 {
    (2.0 * (sigmoid(v) - 0.5)).abs()
}

/// Adaptive inertia weight `exp(−t / (spread · T))`, where spread is the mean
/// of the cost range over the swarm and the distance from `g_best` to the
/// swarm's mean position.
pub fn spread_inertia(
    swarm: &[Particle],
    g_best: &[u8],
    iteration: usize,
    max_iter: usize,
    omega_floor: f64,
) -> f64 {
    let (lo, hi) = swarm
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.cost), hi.max(p.cost))
        });
    let precision = if swarm.is_empty() { 0.0 } else { hi - lo };
    let n = swarm.len().max(1) as f64;
    let deviation = g_best
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mean = swarm.iter().map(|p| f64::from(p.position[i])).sum::<f64>() / n;
            (f64::from(g) - mean).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let spread = (precision + deviation) / 2.0;
    if !(spread >= SPREAD_EPS) {
        return omega_floor;
    }
    if max_iter == 0 {
        return 1.0;
    }
    (-(iteration as f64) / (spread * max_iter as f64)).exp()
}

/// Linearly scheduled cognitive and social coefficients `(α, β)`.
pub fn scheduled_coefficients(config: &SwarmConfig, iteration: usize) -> (f64, f64) {
    let frac = if config.max_iter == 0 {
        0.0
    } else {
        iteration as f64 / config.max_iter as f64
    };
    (
        (config.alpha_f - config.alpha_i) * frac + config.alpha_i,
        (config.beta_f - config.beta_i) * frac + config.beta_i,
    )
}

/// Velocity update with explicit uniform draws, two per dimension
/// (cognitive first).
#[allow(clippy::too_many_arguments)]
pub fn update_velocity_with(
    particle: &mut Particle,
    g_best: &[u8],
    omega: f64,
    alpha: f64,
    beta: f64,
    v_min: f64,
    v_max: f64,
    mut uniform: impl FnMut() -> f64,
) {
    for (i, v) in particle.velocity.iter_mut().enumerate() {
        let x = f64::from(particle.position[i]);
        let r1 = uniform();
        let r2 = uniform();
        let raw = omega * *v
            + alpha * r1 * (f64::from(particle.p_best_position[i]) - x)
            + beta * r2 * (f64::from(g_best[i]) - x);
        *v = raw.clamp(v_min, v_max);
    }
}

#[allow(clippy::too_many_arguments)]
pub fn update_velocity(
    particle: &mut Particle,
    g_best: &[u8],
    omega: f64,
    alpha: f64,
    beta: f64,
    v_min: f64,
    v_max: f64,
    rng: &mut ChaCha8Rng,
) {
    update_velocity_with(particle, g_best, omega, alpha, beta, v_min, v_max, || {
        rng.random::<f64>()
    });
}

/// Bit update with explicit uniform draws, one per dimension.
///
/// Positive velocity may deploy (only if the node still has room), negative
/// or zero velocity may release. The result is repaired; if repair fails the
/// particle keeps its old position. Returns whether the position changed.
pub fn update_position_with(
    particle: &mut Particle,
    problem: &Problem<'_>,
    mut uniform: impl FnMut() -> f64,
) -> bool {
    let t = problem.topology();
    let snap = problem.snapshot();
    let n_fog = t.n_fog();
    let fog = problem.fog_matrix(&particle.position);
    let mut usage: Vec<NodeUsage> = (0..n_fog).map(|f| fog_usage(&fog, snap, t, f)).collect();
    let mut next = particle.position.clone();

    for (i, bit) in next.iter_mut().enumerate() {
        let u = uniform();
        let v = particle.velocity[i];
        let m = flip_probability(v);
        if m == 0.0 || m < u {
            continue;
        }
        let (s, f) = (i / n_fog, i % n_fog);
        let svc = &t.services[s];
        if v > 0.0 {
            if *bit == 0 {
                let node = &t.fog_nodes[f];
                let mut trial = usage[f];
                trial.add(
                    svc.mem_demand,
                    svc.stor_demand,
                    svc.proc_demand,
                    snap.rate(s, f),
                );
                if trial.fits(node.mem_cap, node.stor_cap, node.proc_cap) {
                    usage[f] = trial;
                    *bit = 1;
                }
            }
        } else if *bit == 1 {
            usage[f].remove(svc.mem_demand, svc.stor_demand, svc.proc_demand);
            *bit = 0;
        }
    }

    if next == particle.position || !problem.repair(&mut next) {
        return false;
    }
    let changed = next != particle.position;
    particle.position = next;
    changed
}

pub fn update_position(
    particle: &mut Particle,
    rng: &mut ChaCha8Rng,
    problem: &Problem<'_>,
) -> bool {
    update_position_with(particle, problem, || rng.random::<f64>())
}

/// One global PSO step over every particle, steered by the `g_best` held
/// at the start of the sweep.
pub fn pso_sweep(
    swarm: &mut [Particle],
    rngs: &mut [ChaCha8Rng],
    g_best: &mut GlobalBest,
    problem: &Problem<'_>,
    config: &SwarmConfig,
    iteration: usize,
) {
    let omega = spread_inertia(
        swarm,
        &g_best.position,
        iteration,
        config.max_iter,
        config.omega_floor,
    );
    let (alpha, beta) = scheduled_coefficients(config, iteration);
    let leader = g_best.position.clone();
    for (p, rng) in swarm.iter_mut().zip(rngs.iter_mut()) {
        update_velocity(
            p,
            &leader,
            omega,
            alpha,
            beta,
            config.v_min,
            config.v_max,
            rng,
        );
        if update_position(p, rng, problem) {
            let cost = problem.cost(&p.position);
            let position = p.position.clone();
            p.relocate(position, cost);
        }
    }
    for p in swarm.iter() {
        g_best.offer(&p.p_best_position, p.p_best_cost);
    }
}
