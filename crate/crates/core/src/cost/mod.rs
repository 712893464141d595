//! The provisioning objective: itemized losses, normalization, constraint
//! handling, and best-fit repair.
//!
//! Loss terms, per (service, fog node) unless noted, all scaled by the
//! reconfiguration period `τ` where they are rates:
//!
//! | term            | definition                                                        |
//! |-----------------|-------------------------------------------------------------------|
//! | proc (fog)      | `c_proc · ψ^fog · τ` on fog-served traffic                        |
//! | stor (fog)      | `c_stor_fog · R_stor[Gb] · τ` per fog instance                    |
//! | violation       | `c_viol(s) · max(0, 100·P(D > th) − 100·(1 − q)) · τ`             |
//! | comm fog–cloud  | `c_comm_fc · forwarded Gb over τ`                                 |
//! | dep             | `c_comm_fsc · R_stor[Gb]` on every 0→1 deploy                     |
//! | wrong           | `c_wrong · rejected requests/s · τ`                               |
//! | delay           | `c_delay · d_service · τ + c_deploy · d_deploy · τ` (0→1 only)    |
//! | comm fog–fog    | zero: no inter-fog routing is modeled                             |
//! | utilization     | per-instance share of the node utilization reward (≤ 0)           |
//! | proc (cloud)    | `c_proc · ψ^cloud · τ` per cloud instance                         |
//! | stor (cloud)    | `c_stor_cloud · R_stor[Gb] · τ` per cloud instance                |
//!
//! Traffic-driven terms (violation, wrong, service delay) vanish for pairs
//! without traffic. Fog terms are normalized by `|F|·|S|`, fog-to-fog by
//! `|F|²·|S|`, cloud terms by `|C|·|S|`.

pub mod constraints;
pub mod repair;

pub use constraints::{
    check_constraints, forwarded_rates, is_feasible_fog, release_rule_cloud, with_forced_cloud,
    Violation,
};
pub use repair::{best_fit_repair, repair_fog_matrix, RepairError};

use crate::delay::{
    compute_psi_fog, deploy_delay, path_delay_ms, path_violation, request_path, DelayParams,
    DelayReport, LoadProfile,
};
use crate::matrix::Matrix;
use crate::model::{FogNodeSpec, PlacementState, ServiceSpec, Topology, BITS_PER_BYTE};
use crate::traffic::TrafficSnapshot;
use serde::{Deserialize, Serialize};

const BITS_PER_GIGABIT: f64 = 1e9;

#[inline]
fn gigabits(bytes: f64) -> f64 {
    bytes * BITS_PER_BYTE / BITS_PER_GIGABIT
}

/// Prices and scalars of the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRates {
    /// Per million instructions.
    pub c_proc: f64,
    /// Per gigabit of stored image per second, fog nodes.
    pub c_stor_fog: f64,
    /// Per gigabit of stored image per second, cloud servers.
    pub c_stor_cloud: f64,
    /// Per Gb between fog and cloud.
    pub c_comm_fc: f64,
    /// Per Gb from the image store to a fog node.
    pub c_comm_fsc: f64,
    /// Per service: price of one percentage point of violation per second.
    pub c_viol: Vec<f64>,
    /// Per rejected request.
    pub c_wrong: f64,
    /// Per ms of service delay.
    pub c_delay: f64,
    /// Per ms of deploy delay.
    pub c_deploy: f64,
    /// Memory vs storage weight of the utilization reward, in [0, 1].
    pub impact_coefficient: f64,
    /// Reconfiguration period, seconds.
    pub tau_s: f64,
    /// Added to the objective once per violated constraint.
    pub infeasibility_penalty: f64,
}

impl CostRates {
    /// Default prices with one shared violation price for `n_services`.
    pub fn with_violation_rate(n_services: usize, c_viol: f64) -> Self {
        Self {
            c_proc: 2e-3,
            c_stor_fog: 4e-3,
            c_stor_cloud: 4.0,
            c_comm_fc: 0.2,
            c_comm_fsc: 0.5,
            c_viol: vec![c_viol; n_services],
            c_wrong: 2.0,
            c_delay: 4e-3,
            c_deploy: 4e-3,
            impact_coefficient: 0.5,
            tau_s: 120.0,
            infeasibility_penalty: 1e6,
        }
    }

    pub fn validate(&self, n_services: usize) -> Result<(), String> {
        let scalars = [
            self.c_proc,
            self.c_stor_fog,
            self.c_stor_cloud,
            self.c_comm_fc,
            self.c_comm_fsc,
            self.c_wrong,
            self.c_delay,
            self.c_deploy,
            self.tau_s,
            self.infeasibility_penalty,
        ];
        if scalars.iter().chain(&self.c_viol).any(|v| !(*v >= 0.0)) {
            return Err("cost rates must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.impact_coefficient) {
            return Err("impact_coefficient must lie in [0, 1]".into());
        }
        if self.c_viol.len() != n_services {
            return Err(format!(
                "{} violation prices for {n_services} services",
                self.c_viol.len()
            ));
        }
        Ok(())
    }
}

/// Every loss term (raw sums before normalization) and the normalized total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub proc_fog: f64,
    pub stor_fog: f64,
    pub violation_fog: f64,
    pub comm_fc: f64,
    pub dep_fog: f64,
    pub wrong_fog: f64,
    pub delay_fog: f64,
    pub comm_ff: f64,
    pub utilization_fog: f64,
    pub proc_cloud: f64,
    pub stor_cloud: f64,
    /// Number of violated constraints.
    pub n_violations: usize,
    /// `n_violations · infeasibility_penalty`.
    pub penalty: f64,
    /// Normalized objective plus `penalty`.
    pub total: f64,
}

impl CostBreakdown {
    /// The normalized objective without the infeasibility penalty.
    pub fn objective(&self, n_services: usize, n_fog: usize, n_cloud: usize) -> f64 {
        let inv = |d: usize| if d == 0 { 0.0 } else { 1.0 / d as f64 };
        let fog_norm = inv(n_fog * n_services);
        let ff_norm = inv(n_fog * n_fog * n_services);
        let cloud_norm = inv(n_cloud * n_services);
        fog_norm
            * (self.proc_fog
                + self.stor_fog
                + self.violation_fog
                + self.comm_fc
                + self.dep_fog
                + self.wrong_fog
                + self.delay_fog)
            + ff_norm * self.comm_ff
            + fog_norm * self.utilization_fog
            + cloud_norm * (self.proc_cloud + self.stor_cloud)
    }

    /// Recomputes `total` from the parts.
    pub fn recompose(&self, n_services: usize, n_fog: usize, n_cloud: usize) -> f64 {
        self.objective(n_services, n_fog, n_cloud) + self.penalty
    }

    /// The objective term by term, for tabular output.
    pub fn terms(&self) -> [(&'static str, f64); 11] {
        [
            ("proc_fog", self.proc_fog),
            ("stor_fog", self.stor_fog),
            ("violation_fog", self.violation_fog),
            ("comm_fc", self.comm_fc),
            ("dep_fog", self.dep_fog),
            ("wrong_fog", self.wrong_fog),
            ("delay_fog", self.delay_fog),
            ("comm_ff", self.comm_ff),
            ("utilization_fog", self.utilization_fog),
            ("proc_cloud", self.proc_cloud),
            ("stor_cloud", self.stor_cloud),
        ]
    }
}

/// Non-positive fog utilization reward of node `f`:
/// `−α·Σ P·R_mem / M_mem − (1 − α)·Σ P·R_stor / M_stor`.
pub fn utilization_reward(
    placement: &PlacementState,
    f: usize,
    node: &FogNodeSpec,
    services: &[ServiceSpec],
    impact_coefficient: f64,
) -> f64 {
    services
        .iter()
        .enumerate()
        .filter(|(s, _)| placement.is_on_fog(*s, f))
        .map(|(_, svc)| instance_utilization(svc, node, impact_coefficient))
        .sum()
}

/// One instance's share of the node utilization reward.
#[inline]
fn instance_utilization(svc: &ServiceSpec, node: &FogNodeSpec, alpha: f64) -> f64 {
    -alpha * svc.mem_demand / node.mem_cap - (1.0 - alpha) * svc.stor_demand / node.stor_cap
}

/// `c_delay · d_service · τ`.
pub fn service_delay_loss(service_delay_ms: f64, rates: &CostRates) -> f64 {
    rates.c_delay * service_delay_ms * rates.tau_s
}

/// `c_deploy · (1 − P_prev) · P · d_deploy · τ`.
pub fn deploy_delay_loss(
    was_deployed: bool,
    is_deployed: bool,
    deploy_delay_ms: f64,
    rates: &CostRates,
) -> f64 {
    if is_deployed && !was_deployed {
        rates.c_deploy * deploy_delay_ms * rates.tau_s
    } else {
        0.0
    }
}

/// Service-delay plus deploy-delay loss of `(s, f)`.
pub fn delay_loss(
    s: usize,
    f: usize,
    placement: &PlacementState,
    prev_placement: &PlacementState,
    report: &DelayReport,
    rates: &CostRates,
) -> f64 {
    service_delay_loss(report.service_delay_ms[(s, f)], rates)
        + deploy_delay_loss(
            prev_placement.is_on_fog(s, f),
            placement.is_on_fog(s, f),
            report.deploy_delay_ms[(s, f)],
            rates,
        )
}

/// Evaluates placements against one snapshot and one previous placement.
#[derive(Debug, Clone)]
pub struct CostModel<'a> {
    pub topology: &'a Topology,
    pub snapshot: &'a TrafficSnapshot,
    pub prev_fog: &'a Matrix<u8>,
    pub rates: &'a CostRates,
    pub delay: DelayParams,
    psi_fog: Matrix<f64>,
    deploy_ms: Matrix<f64>,
}

impl<'a> CostModel<'a> {
    pub fn new(
        topology: &'a Topology,
        snapshot: &'a TrafficSnapshot,
        prev_placement: &'a PlacementState,
        rates: &'a CostRates,
        delay: DelayParams,
    ) -> Self {
        let deploy_ms = Matrix::from_fn(topology.n_services(), topology.n_fog(), |s, f| {
            deploy_delay(
                &topology.services[s],
                &topology.fog_nodes[f],
                delay.startup_ms,
            )
        });
        Self {
            topology,
            snapshot,
            prev_fog: &prev_placement.fog,
            rates,
            delay,
            psi_fog: compute_psi_fog(snapshot, &topology.services),
            deploy_ms,
        }
    }

    pub fn load(&self, placement: &PlacementState) -> LoadProfile {
        LoadProfile::with_psi_fog(self.psi_fog.clone(), placement, self.topology)
    }

    /// Placement from a fog matrix, cloud side by the release rule.
    pub fn placement(&self, fog: Matrix<u8>) -> PlacementState {
        with_forced_cloud(fog, self.snapshot, self.topology, self.snapshot.interval)
    }

    pub fn placement_from_position(&self, position: &[u8]) -> PlacementState {
        self.placement(Matrix::from_vec(
            self.topology.n_services(),
            self.topology.n_fog(),
            position.to_vec(),
        ))
    }

    /// Total (penalty included) of the placement a position encodes.
    pub fn position_cost(&self, position: &[u8]) -> f64 {
        self.evaluate(&self.placement_from_position(position)).total
    }

    pub fn evaluate(&self, placement: &PlacementState) -> CostBreakdown {
        let load = self.load(placement);
        let n_violations = check_constraints(placement, &load, self.topology).len();
        self.breakdown(placement, &load, n_violations)
    }

    /// Breakdown with the penalty left out.
    pub fn evaluate_unpenalized(&self, placement: &PlacementState) -> CostBreakdown {
        let load = self.load(placement);
        self.breakdown(placement, &load, 0)
    }

    fn breakdown(
        &self,
        placement: &PlacementState,
        load: &LoadProfile,
        n_violations: usize,
    ) -> CostBreakdown {
        let t = self.topology;
        let r = self.rates;
        let tau = r.tau_s;
        let d_max = self.delay.d_max_ms;
        let mut c = CostBreakdown::default();

        for (s, svc) in t.services.iter().enumerate() {
            let allowance = 100.0 * (1.0 - svc.qos_level);
            let image_gb = gigabits(svc.stor_demand);
            for (f, node) in t.fog_nodes.iter().enumerate() {
                let rate = self.snapshot.rate(s, f);
                let on_fog = placement.is_on_fog(s, f);
                if on_fog {
                    c.proc_fog += r.c_proc * load.psi_fog[(s, f)] * tau;
                    c.stor_fog += r.c_stor_fog * image_gb * tau;
                    c.utilization_fog += instance_utilization(svc, node, r.impact_coefficient);
                    if self.prev_fog[(s, f)] == 0 {
                        c.dep_fog += r.c_comm_fsc * image_gb;
                    }
                } else {
                    c.comm_fc += r.c_comm_fc * rate * gigabits(svc.message_bytes()) * tau;
                }
                c.delay_fog += deploy_delay_loss(
                    self.prev_fog[(s, f)] == 1,
                    on_fog,
                    self.deploy_ms[(s, f)],
                    r,
                );
                if rate > 0.0 {
                    let path = request_path(s, f, placement, load, t);
                    let violation = path_violation(&path, svc.delay_threshold, d_max);
                    c.violation_fog += r.c_viol[s] * (100.0 * violation - allowance).max(0.0) * tau;
                    c.delay_fog += service_delay_loss(path_delay_ms(&path, d_max), r);
                    let rejected = match path.queue {
                        Some(q) if q.is_overloaded() => rate * (1.0 - q.service / q.arrival),
                        Some(_) => 0.0,
                        None => rate,
                    };
                    c.wrong_fog += r.c_wrong * rejected * tau;
                }
            }
            for k in 0..t.n_cloud() {
                if placement.is_on_cloud(s, k) {
                    c.proc_cloud += r.c_proc * load.psi_cloud[(s, k)] * tau;
                    c.stor_cloud += r.c_stor_cloud * image_gb * tau;
                }
            }
        }
        c.n_violations = n_violations;
        c.penalty = n_violations as f64 * r.infeasibility_penalty;
        c.total = c.recompose(t.n_services(), t.n_fog(), t.n_cloud());
        c
    }
}

/// Itemized objective of `placement` given the previous placement.
pub fn total_cost(
    placement: &PlacementState,
    prev_placement: &PlacementState,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    rates: &CostRates,
    delay: DelayParams,
) -> CostBreakdown {
    CostModel::new(topology, snapshot, prev_placement, rates, delay).evaluate(placement)
}
