//! Best-fit repair of infeasible placements.
//!
//! Over-capacity fog nodes shed their least-used services (lowest request
//! rate first). Each evicted service moves to the feasible fog node left
//! with the least headroom; if none can take it, its traffic falls back to
//! the cloud. Overloaded cloud servers are then relieved by pulling their
//! busiest forwarded (service, fog node) pairs back onto fog nodes that fit.

use super::constraints::{
    check_constraints, cloud_usage, fog_node_fits, fog_usage, forwarded_rates, release_rule_cloud,
    Violation,
};
use crate::delay::LoadProfile;
use crate::matrix::Matrix;
use crate::model::{PlacementState, Topology};
use crate::traffic::TrafficSnapshot;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("service {service} carries traffic but fits no fog node or cloud server")]
    Unplaceable {
        service: usize,
        placement: Box<PlacementState>,
    },
    #[error("{} constraint violation(s) remain after repair, first: {}", violations.len(), violations[0])]
    Unresolved {
        violations: Vec<Violation>,
        placement: Box<PlacementState>,
    },
}

impl RepairError {
    /// The best-effort placement reached before giving up.
    pub fn into_placement(self) -> PlacementState {
        match self {
            Self::Unplaceable { placement, .. } | Self::Unresolved { placement, .. } => *placement,
        }
    }
}

/// Returns a feasible placement derived from `placement`, with its cloud
/// matrix set by the release rule. Already feasible placements come back
/// unchanged.
pub fn best_fit_repair(
    placement: &PlacementState,
    topology: &Topology,
    snapshot: &TrafficSnapshot,
) -> Result<PlacementState, RepairError> {
    let load = LoadProfile::compute(placement, snapshot, topology);
    if check_constraints(placement, &load, topology).is_empty() {
        return Ok(placement.clone());
    }
    let mut fog = placement.fog.clone();
    repair_fog_matrix(&mut fog, snapshot, topology);
    let repaired = PlacementState {
        cloud: release_rule_cloud(&fog, snapshot, topology),
        fog,
        timestamp: placement.timestamp,
    };
    let load = LoadProfile::compute(&repaired, snapshot, topology);
    let violations = check_constraints(&repaired, &load, topology);
    if violations.is_empty() {
        return Ok(repaired);
    }
    if let Some(service) = unplaceable_service(&repaired, snapshot, topology) {
        return Err(RepairError::Unplaceable {
            service,
            placement: Box::new(repaired),
        });
    }
    Err(RepairError::Unresolved {
        violations,
        placement: Box::new(repaired),
    })
}

/// Repairs a fog matrix in place, assuming the cloud side follows the
/// release rule. Returns whether the fog matrix changed.
pub fn repair_fog_matrix(
    fog: &mut Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> bool {
    let mut changed = false;
    let mut evicted = Vec::new();
    for f in 0..topology.n_fog() {
        while !fog_node_fits(fog, snapshot, topology, f) {
            let victim = (0..topology.n_services())
                .filter(|&s| fog[(s, f)] == 1)
                .min_by(|&a, &b| {
                    snapshot
                        .rate(a, f)
                        .total_cmp(&snapshot.rate(b, f))
                        .then(b.cmp(&a))
                })
                .expect("an infeasible fog node hosts at least one service");
            fog[(victim, f)] = 0;
            evicted.push((victim, f));
            changed = true;
        }
    }
    for (s, from) in evicted {
        if let Some(to) = best_fit_node(fog, snapshot, topology, s, Some(from)) {
            fog[(s, to)] = 1;
        }
    }
    changed | relieve_clouds(fog, snapshot, topology)
}

/// Fog node that can take service `s` with the least headroom left.
pub(crate) fn best_fit_node(
    fog: &Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    s: usize,
    exclude: Option<usize>,
) -> Option<usize> {
    let svc = &topology.services[s];
    let mut best: Option<(f64, usize)> = None;
    for (f, node) in topology.fog_nodes.iter().enumerate() {
        if Some(f) == exclude || fog[(s, f)] == 1 {
            continue;
        }
        let mut usage = fog_usage(fog, snapshot, topology, f);
        usage.add(
            svc.mem_demand,
            svc.stor_demand,
            svc.proc_demand,
            snapshot.rate(s, f),
        );
        if !usage.fits(node.mem_cap, node.stor_cap, node.proc_cap) {
            continue;
        }
        let slack = usage.slack(node.mem_cap, node.stor_cap, node.proc_cap);
        if best.is_none_or(|(b, _)| slack < b) {
            best = Some((slack, f));
        }
    }
    best.map(|(_, f)| f)
}

fn relieve_clouds(fog: &mut Matrix<u8>, snapshot: &TrafficSnapshot, topology: &Topology) -> bool {
    let mut changed = false;
    for k in 0..topology.n_cloud() {
        let server = &topology.cloud_servers[k];
        loop {
            let forwarded = forwarded_rates(fog, snapshot, topology);
            if cloud_usage(&forwarded, topology, k).fits(
                server.mem_cap,
                server.stor_cap,
                server.proc_cap,
            ) {
                break;
            }
            // busiest forwarded pair that a fog node can absorb
            let mut candidates: Vec<(usize, usize)> = (0..topology.n_services())
                .flat_map(|s| (0..topology.n_fog()).map(move |f| (s, f)))
                .filter(|&(s, f)| {
                    fog[(s, f)] == 0 && topology.offload(s, f) == k && snapshot.rate(s, f) > 0.0
                })
                .collect();
            candidates.sort_by(|a, b| {
                snapshot
                    .rate(b.0, b.1)
                    .total_cmp(&snapshot.rate(a.0, a.1))
                    .then(a.cmp(b))
            });
            let absorbed = candidates.into_iter().find(|&(s, f)| {
                fog[(s, f)] = 1;
                let ok = fog_node_fits(fog, snapshot, topology, f);
                if !ok {
                    fog[(s, f)] = 0;
                }
                ok
            });
            if absorbed.is_none() {
                break;
            }
            changed = true;
        }
    }
    changed
}

fn unplaceable_service(
    placement: &PlacementState,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> Option<usize> {
    topology.services.iter().enumerate().find_map(|(s, svc)| {
        let has_traffic = (0..topology.n_fog()).any(|f| snapshot.rate(s, f) > 0.0);
        let forwarded =
            (0..topology.n_fog()).any(|f| !placement.is_on_fog(s, f) && snapshot.rate(s, f) > 0.0);
        let fits_cloud = topology
            .cloud_servers
            .iter()
            .any(|c| svc.mem_demand < c.mem_cap && svc.stor_demand < c.stor_cap);
        let fits_fog = topology
            .fog_nodes
            .iter()
            .any(|n| svc.mem_demand < n.mem_cap && svc.stor_demand < n.stor_cap);
        (has_traffic && forwarded && !fits_cloud && !fits_fog).then_some(s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::constraints::with_forced_cloud;
    use crate::model::{fixtures, new_placement};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feasible(p: &PlacementState, snap: &TrafficSnapshot, t: &Topology) -> bool {
        let load = LoadProfile::compute(p, snap, t);
        check_constraints(p, &load, t).is_empty()
    }

    #[test]
    fn feasible_input_is_returned_unchanged() {
        let t = fixtures::topology(3, 2, 1);
        let mut snap = TrafficSnapshot::zeros(0, &t);
        snap.rates[(0, 0)] = 1.0;
        let mut fog = Matrix::zeros(3, 2);
        fog[(0, 0)] = 1;
        fog[(2, 1)] = 1;
        let p = with_forced_cloud(fog, &snap, &t, 4);
        assert_eq!(best_fit_repair(&p, &t, &snap).unwrap(), p);
    }

    #[test]
    fn evicted_service_moves_to_the_node_that_fits() {
        let mut t = fixtures::topology(2, 2, 1);
        // each node holds one service's memory only
        for n in &mut t.fog_nodes {
            n.mem_cap = 1.5e9;
        }
        let mut snap = TrafficSnapshot::zeros(0, &t);
        snap.rates[(0, 0)] = 2.0;
        snap.rates[(1, 0)] = 1.0;
        snap.rates[(1, 1)] = 1.0;
        let mut fog = Matrix::zeros(2, 2);
        fog[(0, 0)] = 1;
        fog[(1, 0)] = 1;
        let p = with_forced_cloud(fog, &snap, &t, 0);
        let r = best_fit_repair(&p, &t, &snap).unwrap();
        assert_eq!(r.fog.as_slice(), &[1, 0, 0, 1]);
        assert!(feasible(&r, &snap, &t));
    }

    #[test]
    fn best_fit_prefers_tightest_node() {
        let mut t = fixtures::topology(2, 3, 1);
        t.fog_nodes[0].mem_cap = 1.1e9; // holds nothing besides service 0
        t.fog_nodes[1].mem_cap = 20e9;
        t.fog_nodes[2].mem_cap = 2.5e9;
        let snap = TrafficSnapshot::zeros(0, &t);
        let mut fog = Matrix::zeros(2, 3);
        fog[(0, 0)] = 1;
        fog[(1, 0)] = 1;
        let mut fixed = fog.clone();
        repair_fog_matrix(&mut fixed, &snap, &t);
        // service 1 (lowest rate, higher index) evicted, lands on node 2
        assert_eq!(fixed.as_slice(), &[1, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn unplaceable_service_is_named() {
        let mut t = fixtures::topology(2, 1, 1);
        t.services[1].mem_demand = 1e15;
        let mut snap = TrafficSnapshot::zeros(0, &t);
        snap.rates[(1, 0)] = 1.0;
        let p = new_placement(&t);
        match best_fit_repair(&p, &t, &snap) {
            Err(RepairError::Unplaceable { service, .. }) => assert_eq!(service, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cloud_overload_pulls_traffic_to_fog() {
        let mut t = fixtures::topology(2, 2, 1);
        t.cloud_servers[0].proc_cap = 1000.0; // μ = 1000 / 200 = 5 req/s
        let mut snap = TrafficSnapshot::zeros(0, &t);
        snap.rates = Matrix::from_vec(2, 2, vec![3.0, 3.0, 1.0, 1.0]);
        let p = with_forced_cloud(Matrix::zeros(2, 2), &snap, &t, 0);
        assert!(!feasible(&p, &snap, &t));
        let r = best_fit_repair(&p, &t, &snap).unwrap();
        assert!(feasible(&r, &snap, &t));
        assert!(r.fog_deployments() >= 1);
    }

    #[test]
    fn randomized_repairs_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let mut t = fixtures::topology(4, 3, 2);
            for n in &mut t.fog_nodes {
                n.mem_cap = rng.random_range(1.5e9..5e9);
                n.stor_cap = rng.random_range(1.5e9..5e9);
                n.proc_cap = rng.random_range(200.0..1300.0);
            }
            for s in &mut t.services {
                s.proc_demand = rng.random_range(20.0..200.0);
            }
            let mut snap = TrafficSnapshot::zeros(0, &t);
            for r in snap.rates.as_mut_slice() {
                *r = rng.random_range(0.0..3.0);
            }
            let fog = Matrix::from_fn(4, 3, |_, _| u8::from(rng.random_bool(0.6)));
            let p = PlacementState {
                fog,
                cloud: Matrix::from_fn(4, 2, |_, _| u8::from(rng.random_bool(0.5))),
                timestamp: 0,
            };
            let r = best_fit_repair(&p, &t, &snap).expect("instance is repairable");
            assert!(feasible(&r, &snap, &t));
        }
    }
}
