//! Load, dedicated capacity, and the per-request delay model.
//!
//! Every deployed service instance is an M/M/1 queue. Its service rate is the
//! dedicated capacity divided by the per-request demand, `μ = Γ / R_proc`
//! (requests/s). The arrival rate is the fog node's own traffic for a fog
//! instance and the sum of all traffic forwarded to the cloud server for a
//! cloud instance. Sojourn time is exponential with rate `μ − λ`; a request
//! also pays a deterministic part made of propagation and transmission
//! delays. Delays are capped at `d_max_ms`, which an overloaded queue
//! (`λ ≥ μ`) hits directly.

use crate::matrix::Matrix;
use crate::model::{FogNodeSpec, PlacementState, ServiceSpec, Topology, BITS_PER_BYTE};
use crate::traffic::TrafficSnapshot;
use serde::{Deserialize, Serialize};

/// Container startup time added to every deploy delay.
pub const DEFAULT_STARTUP_MS: f64 = 50.0;

/// Ratio between the default delay ceiling and the largest service threshold.
pub const D_MAX_THRESHOLD_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayParams {
    /// Ceiling on any request delay, ms.
    pub d_max_ms: f64,
    pub startup_ms: f64,
}

impl DelayParams {
    /// `d_max_ms` defaults to ten times the largest delay threshold.
    pub fn for_topology(topology: &Topology) -> Self {
        Self {
            d_max_ms: D_MAX_THRESHOLD_FACTOR * topology.max_delay_threshold(),
            startup_ms: DEFAULT_STARTUP_MS,
        }
    }
}

/// Instruction arrival rates `ψ` and dedicated capacities `Γ`, all in MIPS.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub psi_fog: Matrix<f64>,
    pub psi_cloud: Matrix<f64>,
    pub gamma_fog: Matrix<f64>,
    pub gamma_cloud: Matrix<f64>,
}

impl LoadProfile {
    pub fn compute(
        placement: &PlacementState,
        snapshot: &TrafficSnapshot,
        topology: &Topology,
    ) -> Self {
        let psi_fog = compute_psi_fog(snapshot, &topology.services);
        Self::with_psi_fog(psi_fog, placement, topology)
    }

    /// Same as [`LoadProfile::compute`] with a precomputed `ψ^fog`.
    pub fn with_psi_fog(
        psi_fog: Matrix<f64>,
        placement: &PlacementState,
        topology: &Topology,
    ) -> Self {
        let psi_cloud = compute_psi_cloud(&psi_fog, placement, topology);
        let (gamma_fog, gamma_cloud) = compute_gamma(placement, topology);
        Self {
            psi_fog,
            psi_cloud,
            gamma_fog,
            gamma_cloud,
        }
    }
}

/// `ψ^fog(s, f) = R_proc(s) · T(s, f)`, independent of placement.
pub fn compute_psi_fog(snapshot: &TrafficSnapshot, services: &[ServiceSpec]) -> Matrix<f64> {
    let (rows, cols) = snapshot.rates.shape();
    debug_assert_eq!(rows, services.len());
    Matrix::from_fn(rows, cols, |s, f| {
        services[s].proc_demand * snapshot.rates[(s, f)]
    })
}

/// Rejected fog traffic summed per offload target; fog-served traffic is not
/// forwarded.
pub fn compute_psi_cloud(
    psi_fog: &Matrix<f64>,
    placement: &PlacementState,
    topology: &Topology,
) -> Matrix<f64> {
    let mut out = Matrix::zeros(topology.n_services(), topology.n_cloud());
    for s in 0..topology.n_services() {
        for f in 0..topology.n_fog() {
            if !placement.is_on_fog(s, f) {
                out[(s, topology.offload(s, f))] += psi_fog[(s, f)];
            }
        }
    }
    out
}

/// Capacity shares proportional to per-request demand among the services
/// deployed on each node; zero where the service is not deployed.
pub fn compute_gamma(
    placement: &PlacementState,
    topology: &Topology,
) -> (Matrix<f64>, Matrix<f64>) {
    let services = &topology.services;
    let share = |deployed: &dyn Fn(usize) -> bool, capacity: f64| -> Vec<f64> {
        let total: f64 = (0..services.len())
            .filter(|&s| deployed(s))
            .map(|s| services[s].proc_demand)
            .sum();
        (0..services.len())
            .map(|s| {
                if deployed(s) {
                    services[s].proc_demand / total * capacity
                } else {
                    0.0
                }
            })
            .collect()
    };

    let mut gamma_fog = Matrix::zeros(topology.n_services(), topology.n_fog());
    for (f, node) in topology.fog_nodes.iter().enumerate() {
        let col = share(&|s| placement.is_on_fog(s, f), node.proc_cap);
        for (s, g) in col.into_iter().enumerate() {
            gamma_fog[(s, f)] = g;
        }
    }
    let mut gamma_cloud = Matrix::zeros(topology.n_services(), topology.n_cloud());
    for (k, server) in topology.cloud_servers.iter().enumerate() {
        let col = share(&|s| placement.is_on_cloud(s, k), server.proc_cap);
        for (s, g) in col.into_iter().enumerate() {
            gamma_cloud[(s, k)] = g;
        }
    }
    (gamma_fog, gamma_cloud)
}

/// M/M/1 queue in requests/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Queue {
    pub arrival: f64,
    pub service: f64,
}

impl Queue {
    pub fn is_overloaded(&self) -> bool {
        self.arrival >= self.service
    }

    /// Mean sojourn `1/(μ − λ)` in ms; infinite when overloaded.
    pub fn mean_sojourn_ms(&self) -> f64 {
        if self.is_overloaded() {
            f64::INFINITY
        } else {
            1000.0 / (self.service - self.arrival)
        }
    }

    /// `P(sojourn > excess_ms)`.
    pub fn sojourn_tail(&self, excess_ms: f64) -> f64 {
        if self.is_overloaded() || excess_ms <= 0.0 {
            1.0
        } else {
            (-(self.service - self.arrival) * excess_ms / 1000.0)
                .exp()
                .clamp(0.0, 1.0)
        }
    }
}

/// Where a request of `(s, f)` is served and what it pays on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestPath {
    pub on_fog: bool,
    /// Propagation plus transmission, ms.
    pub fixed_ms: f64,
    /// `None` when no instance serves the request.
    pub queue: Option<Queue>,
}

impl RequestPath {
    pub fn is_overloaded(&self) -> bool {
        self.queue.is_none_or(|q| q.is_overloaded())
    }
}

/// Milliseconds to push `bytes` over a `bits_per_s` link.
#[inline]
pub fn transmission_ms(bytes: f64, bits_per_s: f64) -> f64 {
    bytes * BITS_PER_BYTE / bits_per_s * 1000.0
}

pub fn fog_fixed_ms(service: &ServiceSpec, node: &FogNodeSpec) -> f64 {
    2.0 * node.prop_iot_ms + transmission_ms(service.message_bytes(), node.link_rate_iot)
}

pub fn cloud_fixed_ms(service: &ServiceSpec, node: &FogNodeSpec) -> f64 {
    fog_fixed_ms(service, node)
        + 2.0 * node.prop_cloud_ms
        + transmission_ms(service.message_bytes(), node.link_rate_cloud)
}

pub fn request_path(
    s: usize,
    f: usize,
    placement: &PlacementState,
    load: &LoadProfile,
    topology: &Topology,
) -> RequestPath {
    let service = &topology.services[s];
    let node = &topology.fog_nodes[f];
    let r = service.proc_demand;
    if placement.is_on_fog(s, f) {
        RequestPath {
            on_fog: true,
            fixed_ms: fog_fixed_ms(service, node),
            queue: Some(Queue {
                arrival: load.psi_fog[(s, f)] / r,
                service: load.gamma_fog[(s, f)] / r,
            }),
        }
    } else {
        let k = topology.offload(s, f);
        RequestPath {
            on_fog: false,
            fixed_ms: cloud_fixed_ms(service, node),
            queue: placement.is_on_cloud(s, k).then(|| Queue {
                arrival: load.psi_cloud[(s, k)] / r,
                service: load.gamma_cloud[(s, k)] / r,
            }),
        }
    }
}

/// Mean delay of a request along `path`, capped at `d_max_ms`.
pub fn path_delay_ms(path: &RequestPath, d_max_ms: f64) -> f64 {
    match path.queue {
        Some(q) if !q.is_overloaded() => (path.fixed_ms + q.mean_sojourn_ms()).min(d_max_ms),
        _ => d_max_ms,
    }
}

/// Probability that a request along `path` takes longer than `threshold_ms`.
///
/// Nothing exceeds a threshold at or above the ceiling. Below it an
/// overloaded or unserved path always violates, and so does a threshold the
/// deterministic part alone already exceeds.
pub fn path_violation(path: &RequestPath, threshold_ms: f64, d_max_ms: f64) -> f64 {
    if threshold_ms >= d_max_ms {
        return 0.0;
    }
    match path.queue {
        Some(q) if !q.is_overloaded() => q.sojourn_tail(threshold_ms - path.fixed_ms),
        _ => 1.0,
    }
}

/// Mean service delay of `(s, f)` in ms.
pub fn service_delay(
    s: usize,
    f: usize,
    placement: &PlacementState,
    load: &LoadProfile,
    topology: &Topology,
    params: &DelayParams,
) -> f64 {
    path_delay_ms(
        &request_path(s, f, placement, load, topology),
        params.d_max_ms,
    )
}

/// `P(D > th_s)` for requests of `(s, f)`.
pub fn violation_prob(
    s: usize,
    f: usize,
    placement: &PlacementState,
    load: &LoadProfile,
    topology: &Topology,
    params: &DelayParams,
) -> f64 {
    let path = request_path(s, f, placement, load, topology);
    path_violation(&path, topology.services[s].delay_threshold, params.d_max_ms)
}

/// Container download plus startup, ms.
pub fn deploy_delay(service: &ServiceSpec, node: &FogNodeSpec, startup_ms: f64) -> f64 {
    service.stor_demand / node.fsc_rate * 1000.0 + startup_ms
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayReport {
    pub service_delay_ms: Matrix<f64>,
    pub deploy_delay_ms: Matrix<f64>,
    pub violation_prob: Matrix<f64>,
    pub overloaded: Matrix<bool>,
}

pub fn delay_report(
    placement: &PlacementState,
    load: &LoadProfile,
    topology: &Topology,
    params: &DelayParams,
) -> DelayReport {
    let (n_s, n_f) = (topology.n_services(), topology.n_fog());
    let mut service_delay_ms = Matrix::zeros(n_s, n_f);
    let mut deploy_delay_ms = Matrix::zeros(n_s, n_f);
    let mut violation = Matrix::zeros(n_s, n_f);
    let mut overloaded = Matrix::filled(n_s, n_f, false);
    for s in 0..n_s {
        let service = &topology.services[s];
        for f in 0..n_f {
            let path = request_path(s, f, placement, load, topology);
            service_delay_ms[(s, f)] = path_delay_ms(&path, params.d_max_ms);
            violation[(s, f)] = path_violation(&path, service.delay_threshold, params.d_max_ms);
            overloaded[(s, f)] = path.is_overloaded();
            deploy_delay_ms[(s, f)] =
                deploy_delay(service, &topology.fog_nodes[f], params.startup_ms);
        }
    }
    DelayReport {
        service_delay_ms,
        deploy_delay_ms,
        violation_prob: violation,
        overloaded,
    }
}
