//! Capacity and release constraints, plus the release rule that fixes the
//! cloud matrix from the fog matrix.

use crate::delay::LoadProfile;
use crate::matrix::Matrix;
use crate::model::{PlacementState, Topology};
use crate::traffic::TrafficSnapshot;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Violation {
    /// `ψ^fog(s, f) ≥ Γ^fog(s, f)` on a deployed instance.
    FogProcessing {
        service: usize,
        fog: usize,
    },
    /// `ψ^cloud(s, k) ≥ Γ^cloud(s, k)` on a deployed instance.
    CloudProcessing {
        service: usize,
        cloud: usize,
    },
    FogStorage {
        fog: usize,
    },
    FogMemory {
        fog: usize,
    },
    CloudStorage {
        cloud: usize,
    },
    CloudMemory {
        cloud: usize,
    },
    /// Traffic is forwarded to a cloud server that has no instance.
    MissingCloudInstance {
        service: usize,
        cloud: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::FogProcessing { service, fog } => {
                write!(f, "service {service} overloads its share on fog node {fog}")
            }
            Self::CloudProcessing { service, cloud } => {
                write!(f, "service {service} overloads its share on cloud {cloud}")
            }
            Self::FogStorage { fog } => write!(f, "fog node {fog} out of storage"),
            Self::FogMemory { fog } => write!(f, "fog node {fog} out of memory"),
            Self::CloudStorage { cloud } => write!(f, "cloud {cloud} out of storage"),
            Self::CloudMemory { cloud } => write!(f, "cloud {cloud} out of memory"),
            Self::MissingCloudInstance { service, cloud } => write!(
                f,
                "service {service} has traffic forwarded to cloud {cloud} but no instance there"
            ),
        }
    }
}

/// Requests/s of service `s` forwarded to each cloud server.
pub fn forwarded_rates(
    fog: &Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> Matrix<f64> {
    let mut out = Matrix::zeros(topology.n_services(), topology.n_cloud());
    for s in 0..topology.n_services() {
        for f in 0..topology.n_fog() {
            if fog[(s, f)] == 0 {
                out[(s, topology.offload(s, f))] += snapshot.rate(s, f);
            }
        }
    }
    out
}

/// The cloud matrix forced by the release rule: `Q(s, k) = 1` exactly when
/// traffic of `s` is forwarded to `k`.
pub fn release_rule_cloud(
    fog: &Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> Matrix<u8> {
    forwarded_rates(fog, snapshot, topology).map(|&r| u8::from(r > 0.0))
}

/// Placement with the given fog matrix and the cloud matrix the release rule
/// forces for `snapshot`.
pub fn with_forced_cloud(
    fog: Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    timestamp: usize,
) -> PlacementState {
    let cloud = release_rule_cloud(&fog, snapshot, topology);
    PlacementState {
        fog,
        cloud,
        timestamp,
    }
}

/// Every violated constraint; empty iff the placement is feasible.
pub fn check_constraints(
    placement: &PlacementState,
    load: &LoadProfile,
    topology: &Topology,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let services = &topology.services;

    for (f, node) in topology.fog_nodes.iter().enumerate() {
        let (mut mem, mut stor) = (0.0, 0.0);
        for (s, svc) in services.iter().enumerate() {
            if placement.is_on_fog(s, f) {
                mem += svc.mem_demand;
                stor += svc.stor_demand;
                if load.psi_fog[(s, f)] >= load.gamma_fog[(s, f)] {
                    out.push(Violation::FogProcessing { service: s, fog: f });
                }
            }
        }
        if stor >= node.stor_cap {
            out.push(Violation::FogStorage { fog: f });
        }
        if mem >= node.mem_cap {
            out.push(Violation::FogMemory { fog: f });
        }
    }

    for (k, server) in topology.cloud_servers.iter().enumerate() {
        let (mut mem, mut stor) = (0.0, 0.0);
        for (s, svc) in services.iter().enumerate() {
            if placement.is_on_cloud(s, k) {
                mem += svc.mem_demand;
                stor += svc.stor_demand;
                if load.psi_cloud[(s, k)] >= load.gamma_cloud[(s, k)] {
                    out.push(Violation::CloudProcessing {
                        service: s,
                        cloud: k,
                    });
                }
            } else if load.psi_cloud[(s, k)] > 0.0 {
                out.push(Violation::MissingCloudInstance {
                    service: s,
                    cloud: k,
                });
            }
        }
        if stor >= server.stor_cap {
            out.push(Violation::CloudStorage { cloud: k });
        }
        if mem >= server.mem_cap {
            out.push(Violation::CloudMemory { cloud: k });
        }
    }
    out
}

/// Running resource totals of one node, used to test single deploys without
/// rebuilding the whole load profile.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NodeUsage {
    pub mem: f64,
    pub stor: f64,
    /// Σ R_proc of deployed services.
    pub demand: f64,
    /// Largest request rate among deployed services.
    pub max_rate: f64,
}

impl NodeUsage {
    pub fn add(&mut self, mem: f64, stor: f64, demand: f64, rate: f64) {
        self.mem += mem;
        self.stor += stor;
        self.demand += demand;
        self.max_rate = self.max_rate.max(rate);
    }

    /// Removes a service's demands. `max_rate` is left as an upper bound.
    pub fn remove(&mut self, mem: f64, stor: f64, demand: f64) {
        self.mem -= mem;
        self.stor -= stor;
        self.demand -= demand;
    }

    /// Memory, storage and processing (`λ_max · ΣR < M`, the per-instance
    /// share condition) all strictly below capacity.
    pub fn fits(&self, mem_cap: f64, stor_cap: f64, proc_cap: f64) -> bool {
        self.mem < mem_cap && self.stor < stor_cap && self.max_rate * self.demand < proc_cap
    }

    /// Smallest normalized headroom over the three resources.
    pub fn slack(&self, mem_cap: f64, stor_cap: f64, proc_cap: f64) -> f64 {
        ((mem_cap - self.mem) / mem_cap)
            .min((stor_cap - self.stor) / stor_cap)
            .min((proc_cap - self.max_rate * self.demand) / proc_cap)
    }
}

pub(crate) fn fog_usage(
    fog: &Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    f: usize,
) -> NodeUsage {
    let mut u = NodeUsage::default();
    for (s, svc) in topology.services.iter().enumerate() {
        if fog[(s, f)] == 1 {
            u.add(
                svc.mem_demand,
                svc.stor_demand,
                svc.proc_demand,
                snapshot.rate(s, f),
            );
        }
    }
    u
}

pub(crate) fn fog_node_fits(
    fog: &Matrix<u8>,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    f: usize,
) -> bool {
    let n = &topology.fog_nodes[f];
    fog_usage(fog, snapshot, topology, f).fits(n.mem_cap, n.stor_cap, n.proc_cap)
}

/// Cloud-side usage under the release rule: per server, totals over the
/// services it must host and the largest forwarded rate among them.
pub(crate) fn cloud_usage(forwarded: &Matrix<f64>, topology: &Topology, k: usize) -> NodeUsage {
    let mut u = NodeUsage::default();
    for (s, svc) in topology.services.iter().enumerate() {
        let rate = forwarded[(s, k)];
        if rate > 0.0 {
            u.add(svc.mem_demand, svc.stor_demand, svc.proc_demand, rate);
        }
    }
    u
}

/// Fast feasibility test of a fog matrix whose cloud side follows the
/// release rule. Agrees with [`check_constraints`] on such placements.
pub fn is_feasible_fog(fog: &Matrix<u8>, snapshot: &TrafficSnapshot, topology: &Topology) -> bool {
    if !(0..topology.n_fog()).all(|f| fog_node_fits(fog, snapshot, topology, f)) {
        return false;
    }
    let forwarded = forwarded_rates(fog, snapshot, topology);
    topology
        .cloud_servers
        .iter()
        .enumerate()
        .all(|(k, c)| cloud_usage(&forwarded, topology, k).fits(c.mem_cap, c.stor_cap, c.proc_cap))
}
