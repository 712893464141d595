//! Scenarios and small topologies shared by the integration tests.

#![allow(dead_code)]

use fogprov::matrix::Matrix;
use fogprov::model::{CloudServerSpec, FogNodeSpec, ServiceSpec, Topology};
use fogprov::scenario::{Scenario, ScenarioConfig, Span};
use fogprov::traffic::TrafficSnapshot;

/// 10 fog / 3 cloud / 20 services with diurnal traffic over 60 intervals.
///
/// Service images take 1–3 GB of memory, so a fog node holds only a handful
/// of the 20 services and placement becomes a packing problem. Requests are
/// light enough (0.1–0.4 MI) that a fog instance can meet a 10–15 ms target.
pub fn ordering_config(seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_counts(10, 3, 20);
    cfg.seed = seed;
    cfg.services.proc_demand = Span::new(0.1, 0.4);
    cfg.services.mem_demand = Span::new(1e9, 3e9);
    cfg.cloud_servers.mem_cap = Span::new(64e9, 128e9);
    cfg.simulation.n_intervals = 60;
    cfg.traffic.base_rate = 10.0;
    cfg.traffic.heterogeneity = 0.3;
    cfg.traffic.amplitude = 0.4;
    cfg.optimizer.max_iter = 3000;
    cfg
}

/// The ordering scenario shortened to 10 intervals, with an 80 ms delay
/// ceiling and the default 700-iteration budget.
pub fn sweep_config(seed: u64) -> ScenarioConfig {
    let mut cfg = ordering_config(seed);
    cfg.simulation.n_intervals = 10;
    cfg.simulation.d_max_ms = Some(80.0);
    cfg.optimizer.max_iter = 700;
    cfg
}

pub fn build(cfg: &ScenarioConfig) -> Scenario {
    cfg.build().expect("scenario builds")
}

pub fn service(id: usize, proc_demand: f64, mem_demand: f64) -> ServiceSpec {
    ServiceSpec {
        id,
        proc_demand,
        mem_demand,
        stor_demand: 0.5e9,
        request_size: 16e3,
        response_size: 16.0,
        qos_level: 0.9,
        delay_threshold: 12.0,
    }
}

pub fn fog(id: usize, proc_cap: f64, mem_cap: f64) -> FogNodeSpec {
    FogNodeSpec {
        id,
        proc_cap,
        mem_cap,
        stor_cap: 20e9,
        fsc_rate: 1.25e9,
        prop_iot_ms: 1.0,
        prop_cloud_ms: 20.0,
        link_rate_iot: 1e10,
        link_rate_cloud: 1e10,
    }
}

pub fn cloud(id: usize, proc_cap: f64) -> CloudServerSpec {
    CloudServerSpec {
        id,
        proc_cap,
        mem_cap: 64e9,
        stor_cap: 200e9,
    }
}

/// Two fog nodes that fit one service image each, one cloud, two services.
pub fn tiny_topology() -> Topology {
    Topology::new(
        vec![fog(0, 1000.0, 4e9), fog(1, 1200.0, 4e9)],
        vec![cloud(0, 20000.0)],
        vec![service(0, 2.0, 3e9), service(1, 3.0, 2.5e9)],
        Matrix::filled(2, 2, 0),
    )
    .expect("valid topology")
}

/// Rates for [`tiny_topology`]: each service is hot on one node.
pub fn tiny_snapshot(t: &Topology) -> TrafficSnapshot {
    let mut snap = TrafficSnapshot::zeros(0, t);
    snap.rates = Matrix::from_vec(2, 2, vec![300.0, 50.0, 40.0, 250.0]);
    snap
}

/// 3 fog / 1 cloud / 6 services over 4 intervals with a short solver
/// budget, for tests that run whole simulations. Services are sized as in
/// [`ordering_config`] but heavier on memory, so only part of them fit on
/// the fog tier.
pub fn small_config(seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_counts(3, 1, 6);
    cfg.seed = seed;
    cfg.services.proc_demand = Span::new(0.1, 0.4);
    cfg.services.mem_demand = Span::new(2e9, 4e9);
    cfg.cloud_servers.mem_cap = Span::new(64e9, 128e9);
    cfg.traffic.base_rate = 10.0;
    cfg.traffic.heterogeneity = 0.3;
    cfg.simulation.n_intervals = 4;
    cfg.optimizer.max_iter = 150;
    cfg.optimizer.n_particles = 10;
    cfg
}
