//! Reference provisioning policies.

use crate::cost::constraints::fog_usage;
use crate::cost::{
    best_fit_repair, check_constraints, is_feasible_fog, with_forced_cloud, CostModel, Violation,
};
use crate::delay::{path_violation, request_path, LoadProfile};
use crate::matrix::Matrix;
use crate::model::{PlacementState, Topology};
use crate::optimizer::{solve, Mode, OptimizerError, Solution, SwarmConfig};
use crate::traffic::TrafficSnapshot;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("cloud servers cannot absorb all traffic: {}", violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InsufficientCloud { violations: Vec<Violation> },
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// Nothing on fog; every forwarded service gets a cloud instance.
pub fn all_cloud(
    topology: &Topology,
    snapshot: &TrafficSnapshot,
) -> Result<PlacementState, BaselineError> {
    let p = with_forced_cloud(
        Matrix::zeros(topology.n_services(), topology.n_fog()),
        snapshot,
        topology,
        snapshot.interval,
    );
    let load = LoadProfile::compute(&p, snapshot, topology);
    let violations = check_constraints(&p, &load, topology);
    if violations.is_empty() {
        Ok(p)
    } else {
        Err(BaselineError::InsufficientCloud { violations })
    }
}

/// Thresholds of the traffic-driven greedy policy, in requests/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinViolConfig {
    /// Minimum rate at which a service is worth deploying on a node.
    pub deploy_threshold: f64,
    /// Deployed services are released once their rate drops to
    /// `release_fraction · deploy_threshold` or below.
    pub release_fraction: f64,
}

impl Default for MinViolConfig {
    fn default() -> Self {
        Self {
            deploy_threshold: 0.05,
            release_fraction: 0.7,
        }
    }
}

impl MinViolConfig {
    pub fn release_threshold(&self) -> f64 {
        self.deploy_threshold * self.release_fraction
    }
}

/// Traffic-weighted sum of violation probabilities over all pairs.
fn weighted_violation(model: &CostModel<'_>, placement: &PlacementState) -> f64 {
    let t = model.topology;
    let load = model.load(placement);
    let d_max = model.delay.d_max_ms;
    let mut total = 0.0;
    for (s, svc) in t.services.iter().enumerate() {
        for f in 0..t.n_fog() {
            let rate = model.snapshot.rate(s, f);
            if rate > 0.0 {
                let path = request_path(s, f, placement, &load, t);
                total += rate * path_violation(&path, svc.delay_threshold, d_max);
            }
        }
    }
    total
}

/// Traffic-driven greedy: hot services move to the fog nodes that receive
/// them, cold ones are released.
///
/// Starting from the previous fog matrix, instances whose rate fell to the
/// release threshold are dropped. Then each node, in index order, considers
/// its services by descending rate and deploys one when its rate reaches the
/// deploy threshold, the node has room, remote service would break the QoS
/// level, and the swarm-wide weighted violation goes down.
pub fn min_viol(model: &CostModel<'_>, config: &MinViolConfig) -> PlacementState {
    let t = model.topology;
    let snap = model.snapshot;
    let mut fog = model.prev_fog.clone();
    for s in 0..t.n_services() {
        for f in 0..t.n_fog() {
            if fog[(s, f)] == 1 && snap.rate(s, f) <= config.release_threshold() {
                fog[(s, f)] = 0;
            }
        }
    }
    let mut placement = model.placement(fog);
    let mut current = weighted_violation(model, &placement);

    for f in 0..t.n_fog() {
        let mut order: Vec<usize> = (0..t.n_services()).collect();
        order.sort_by(|&a, &b| snap.rate(b, f).total_cmp(&snap.rate(a, f)).then(a.cmp(&b)));
        let node = &t.fog_nodes[f];
        for s in order {
            let rate = snap.rate(s, f);
            if rate < config.deploy_threshold || placement.is_on_fog(s, f) {
                continue;
            }
            let svc = &t.services[s];
            let mut usage = fog_usage(&placement.fog, snap, t, f);
            usage.add(svc.mem_demand, svc.stor_demand, svc.proc_demand, rate);
            if !usage.fits(node.mem_cap, node.stor_cap, node.proc_cap) {
                continue;
            }
            let load = model.load(&placement);
            let remote = request_path(s, f, &placement, &load, t);
            let d_max = model.delay.d_max_ms;
            if path_violation(&remote, svc.delay_threshold, d_max) <= 1.0 - svc.qos_level {
                continue;
            }
            let mut fog = placement.fog.clone();
            fog[(s, f)] = 1;
            if !is_feasible_fog(&fog, snap, t) {
                continue;
            }
            let candidate = model.placement(fog);
            let v = weighted_violation(model, &candidate);
            if v < current {
                placement = candidate;
                current = v;
            }
        }
    }
    finish(placement, model)
}

fn finish(placement: PlacementState, model: &CostModel<'_>) -> PlacementState {
    let p = best_fit_repair(&placement, model.topology, model.snapshot)
        .unwrap_or_else(|e| e.into_placement());
    PlacementState {
        timestamp: model.snapshot.interval,
        ..p
    }
}

/// Best-improvement single-flip descent on the penalized objective,
/// started from the cheaper of the repaired previous placement and
/// all-cloud.
pub fn min_cost(model: &CostModel<'_>) -> PlacementState {
    let t = model.topology;
    let (n_s, n_f) = (t.n_services(), t.n_fog());
    let prev = finish(model.placement(model.prev_fog.clone()), model);
    let empty = model.placement(Matrix::zeros(n_s, n_f));
    let (mut fog, mut cost) = [prev, empty]
        .into_iter()
        .map(|p| {
            let c = model.evaluate(&p).total;
            (p.fog, c)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");

    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n_s * n_f {
            fog.as_mut_slice()[i] ^= 1;
            let c = model.evaluate(&model.placement(fog.clone())).total;
            fog.as_mut_slice()[i] ^= 1;
            if c < cost && best.is_none_or(|(_, b)| c < b) {
                best = Some((i, c));
            }
        }
        match best {
            Some((i, c)) => {
                fog.as_mut_slice()[i] ^= 1;
                cost = c;
            }
            None => break,
        }
    }
    model.placement(fog)
}

/// The solver with every iteration a global PSO sweep.
pub fn pure_bpso(config: &SwarmConfig, model: CostModel<'_>) -> Result<Solution, BaselineError> {
    Ok(solve(config, model, Mode::PurePso)?)
}
