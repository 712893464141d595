use super::particle::{GlobalBest, Particle, Problem};
use super::{OptimizerError, SwarmConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Energy released by an accepted inter-molecular collision and its split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticSplit {
    pub lost: f64,
    pub q: f64,
    pub first: f64,
    pub second: f64,
}

/// Local search by random swaps inside one particle. Returns whether the
/// new position was accepted.
pub fn on_wall_collision(
    particle: &mut Particle,
    rng: &mut ChaCha8Rng,
    problem: &Problem<'_>,
    config: &SwarmConfig,
    g_best: &mut GlobalBest,
) -> bool {
    let dims = particle.position.len();
    if dims == 0 {
        return false;
    }
    if config.count_rejected_collisions {
        particle.local_thresh += 1;
    }
    let mut next = particle.position.clone();
    for _ in 0..config.swap_steps {
        let i = rng.random_range(0..dims);
        let j = rng.random_range(0..dims);
        next.swap(i, j);
        if !problem.is_feasible(&next) {
            problem.repair(&mut next);
        }
    }
    if next == particle.position || !problem.is_feasible(&next) {
        return false;
    }
    let pe = problem.cost(&next);
    if pe >= particle.cost {
        return false;
    }
    let q = rng.random_range(config.min_ke_loss_per..=1.0);
    particle.kinetic_energy = q * (particle.cost + particle.kinetic_energy - pe);
    particle.relocate(next, pe);
    if !config.count_rejected_collisions {
        particle.local_thresh += 1;
    }
    g_best.offer(&particle.p_best_position, particle.p_best_cost);
    true
}

fn pair_mut(swarm: &mut [Particle], a: usize, b: usize) -> (&mut Particle, &mut Particle) {
    if a < b {
        let (lo, hi) = swarm.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = swarm.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// Crossover steps: each step copies bit `i` of `first` and bit `j` of
/// `second` into `child`, undone if the result is infeasible.
fn cross(
    child: &mut [u8],
    first: &[u8],
    second: &[u8],
    steps: usize,
    rng: &mut ChaCha8Rng,
    problem: &Problem<'_>,
) {
    let dims = child.len();
    for _ in 0..steps {
        let i = rng.random_range(0..dims);
        let j = rng.random_range(0..dims);
        let (ci, cj) = (child[i], child[j]);
        child[i] = first[i];
        child[j] = second[j];
        if (child[i] != ci || child[j] != cj) && !problem.is_feasible(child) {
            child[i] = ci;
            child[j] = cj;
        }
    }
}

/// Collision of particles `a` and `b`. Returns the energy split when the
/// pair's joint cost dropped and both moved.
pub fn inter_molecular_collision(
    swarm: &mut [Particle],
    a: usize,
    b: usize,
    rng: &mut ChaCha8Rng,
    problem: &Problem<'_>,
    config: &SwarmConfig,
    g_best: &mut GlobalBest,
) -> Result<Option<KineticSplit>, OptimizerError> {
    let len = swarm.len();
    if let Some(&index) = [a, b].iter().find(|&&i| i >= len) {
        return Err(OptimizerError::NoSuchParticle { index, len });
    }
    if a == b {
        return Err(OptimizerError::SameParticle(a));
    }
    let (p1, p2) = pair_mut(swarm, a, b);
    if p1.position.is_empty() {
        return Ok(None);
    }
    if config.count_rejected_collisions {
        p1.local_thresh += 1;
        p2.local_thresh += 1;
    }
    let mut n1 = p1.position.clone();
    let mut n2 = p2.position.clone();
    cross(
        &mut n1,
        &p1.position,
        &p2.position,
        config.swap_steps,
        rng,
        problem,
    );
    cross(
        &mut n2,
        &p1.position,
        &p2.position,
        config.swap_steps,
        rng,
        problem,
    );

    let pe1 = problem.cost(&n1);
    let pe2 = problem.cost(&n2);
    if pe1 + pe2 >= p1.cost + p2.cost {
        return Ok(None);
    }
    let lost = p1.cost + p2.cost + p1.kinetic_energy + p2.kinetic_energy - (pe1 + pe2);
    let q = rng.random::<f64>();
    let first = q * lost;
    let split = KineticSplit {
        lost,
        q,
        first,
        second: lost - first,
    };
    p1.kinetic_energy = split.first;
    p2.kinetic_energy = split.second;
    p1.relocate(n1, pe1);
    p2.relocate(n2, pe2);
    if !config.count_rejected_collisions {
        p1.local_thresh += 1;
        p2.local_thresh += 1;
    }
    g_best.offer(&p1.p_best_position, p1.p_best_cost);
    g_best.offer(&p2.p_best_position, p2.p_best_cost);
    Ok(Some(split))
}
