//! Scenario files: counts and sampling ranges for machines and services,
//! prices, optimizer settings and traffic generation, in TOML.
//!
//! ```toml
//! seed = 7
//!
//! [services]
//! count = 20
//! proc_demand = [50.0, 200.0]   # MI per request
//!
//! [fog_nodes]
//! count = 10
//!
//! [cloud_servers]
//! count = 5
//!
//! [simulation]
//! tau_s = 120.0
//! n_intervals = 120
//! ```
//!
//! Every `[lo, hi]` pair is sampled uniformly with the scenario seed; a pair
//! with `lo == hi` is a constant. Only `count` is required in the three
//! machine and service sections, everything else has a default.

use crate::baselines::MinViolConfig;
use crate::cost::CostRates;
use crate::delay::{DelayParams, DEFAULT_STARTUP_MS, D_MAX_THRESHOLD_FACTOR};
use crate::matrix::Matrix;
use crate::model::{CloudServerSpec, FogNodeSpec, ModelError, ServiceSpec, Topology};
use crate::optimizer::SwarmConfig;
use crate::traffic::{synth_trace, SynthConfig, TraceError, TraceSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

const KB: f64 = 1024.0;
const GB: f64 = 1e9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("range `{key}` has low bound above high bound")]
    InvertedRange { key: String },
    #[error("range `{key}` must be finite and non-negative")]
    BadRange { key: String },
    #[error("unknown preset `{0}` (expected exp1, exp2 or exp3)")]
    UnknownPreset(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Closed interval sampled uniformly, written `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn constant(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    fn check(&self, key: &str) -> Result<(), ScenarioError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo >= 0.0) {
            return Err(ScenarioError::BadRange { key: key.into() });
        }
        if self.lo > self.hi {
            return Err(ScenarioError::InvertedRange { key: key.into() });
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Span {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Span> for [f64; 2] {
    fn from(s: Span) -> Self {
        [s.lo, s.hi]
    }
}

macro_rules! check_spans {
    ($section:literal, $self:ident: $($field:ident),+) => {
        $( $self.$field.check(concat!($section, ".", stringify!($field)))?; )+
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceRanges {
    pub count: usize,
    /// MI per request.
    #[serde(default = "d::proc_demand")]
    pub proc_demand: Span,
    /// Bytes.
    #[serde(default = "d::mem_demand")]
    pub mem_demand: Span,
    /// Bytes.
    #[serde(default = "d::stor_demand")]
    pub stor_demand: Span,
    /// Bytes.
    #[serde(default = "d::request_size")]
    pub request_size: Span,
    /// Bytes.
    #[serde(default = "d::response_size")]
    pub response_size: Span,
    #[serde(default = "d::qos_level")]
    pub qos_level: Span,
    /// ms.
    #[serde(default = "d::delay_threshold")]
    pub delay_threshold: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogRanges {
    pub count: usize,
    /// MIPS.
    #[serde(default = "d::fog_proc")]
    pub proc_cap: Span,
    #[serde(default = "d::fog_mem")]
    pub mem_cap: Span,
    #[serde(default = "d::fog_stor")]
    pub stor_cap: Span,
    /// Image download rate from the service controller, bytes/s.
    #[serde(default = "d::fsc_rate")]
    pub fsc_rate: Span,
    #[serde(default = "d::prop_iot")]
    pub prop_iot_ms: Span,
    #[serde(default = "d::prop_cloud")]
    pub prop_cloud_ms: Span,
    /// bits/s.
    #[serde(default = "d::link")]
    pub link_rate_iot: Span,
    /// bits/s.
    #[serde(default = "d::link")]
    pub link_rate_cloud: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudRanges {
    pub count: usize,
    #[serde(default = "d::cloud_proc")]
    pub proc_cap: Span,
    #[serde(default = "d::cloud_mem")]
    pub mem_cap: Span,
    #[serde(default = "d::cloud_stor")]
    pub stor_cap: Span,
}

/// Prices; `c_viol` is sampled per service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub c_proc: f64,
    pub c_stor_fog: f64,
    pub c_stor_cloud: f64,
    pub c_comm_fc: f64,
    pub c_comm_fsc: f64,
    pub c_viol: Span,
    pub c_wrong: f64,
    pub c_delay: f64,
    pub c_deploy: f64,
    pub impact_coefficient: f64,
    pub infeasibility_penalty: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        let r = CostRates::with_violation_rate(0, 0.0);
        Self {
            c_proc: r.c_proc,
            c_stor_fog: r.c_stor_fog,
            c_stor_cloud: r.c_stor_cloud,
            c_comm_fc: r.c_comm_fc,
            c_comm_fsc: r.c_comm_fsc,
            c_viol: Span::new(100.0, 200.0),
            c_wrong: r.c_wrong,
            c_delay: r.c_delay,
            c_deploy: r.c_deploy,
            impact_coefficient: r.impact_coefficient,
            infeasibility_penalty: r.infeasibility_penalty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Reconfiguration period, seconds.
    pub tau_s: f64,
    pub n_intervals: usize,
    /// Delay ceiling; defaults to ten times the largest sampled threshold.
    pub d_max_ms: Option<f64>,
    pub startup_ms: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            tau_s: 120.0,
            n_intervals: 120,
            d_max_ms: None,
            startup_ms: DEFAULT_STARTUP_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub services: ServiceRanges,
    pub fog_nodes: FogRanges,
    pub cloud_servers: CloudRanges,
    #[serde(default)]
    pub costs: CostSection,
    #[serde(default)]
    pub optimizer: SwarmConfig,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default = "d::traffic")]
    pub traffic: SynthConfig,
    #[serde(default)]
    pub min_viol: MinViolConfig,
}

mod d {
    use super::{Span, GB, KB};
    use crate::traffic::SynthConfig;

    pub fn proc_demand() -> Span {
        Span::new(50.0, 200.0)
    }
    pub fn mem_demand() -> Span {
        Span::new(0.05 * GB, 0.2 * GB)
    }
    pub fn stor_demand() -> Span {
        Span::new(0.2 * GB, 1.0 * GB)
    }
    pub fn request_size() -> Span {
        Span::new(10.0 * KB, 26.0 * KB)
    }
    pub fn response_size() -> Span {
        Span::new(10.0, 20.0)
    }
    pub fn qos_level() -> Span {
        Span::new(0.8, 0.99)
    }
    pub fn delay_threshold() -> Span {
        Span::new(10.0, 15.0)
    }
    pub fn fog_proc() -> Span {
        Span::new(800.0, 1300.0)
    }
    pub fn fog_mem() -> Span {
        Span::new(4.0 * GB, 16.0 * GB)
    }
    pub fn fog_stor() -> Span {
        Span::new(10.0 * GB, 25.0 * GB)
    }
    pub fn fsc_rate() -> Span {
        Span::constant(1.25e9)
    }
    pub fn prop_iot() -> Span {
        Span::new(1.0, 2.0)
    }
    pub fn prop_cloud() -> Span {
        Span::new(15.0, 35.0)
    }
    pub fn link() -> Span {
        Span::constant(1e10)
    }
    pub fn cloud_proc() -> Span {
        Span::new(16000.0, 26000.0)
    }
    pub fn cloud_mem() -> Span {
        Span::new(8.0 * GB, 32.0 * GB)
    }
    pub fn cloud_stor() -> Span {
        Span::new(100.0 * GB, 250.0 * GB)
    }
    pub fn traffic() -> SynthConfig {
        SynthConfig {
            base_rate: 0.2,
            ..SynthConfig::default()
        }
    }
}

impl ScenarioConfig {
    /// Default ranges with the given counts.
    pub fn with_counts(n_fog: usize, n_cloud: usize, n_services: usize) -> Self {
        Self {
            seed: 0,
            services: ServiceRanges {
                count: n_services,
                proc_demand: d::proc_demand(),
                mem_demand: d::mem_demand(),
                stor_demand: d::stor_demand(),
                request_size: d::request_size(),
                response_size: d::response_size(),
                qos_level: d::qos_level(),
                delay_threshold: d::delay_threshold(),
            },
            fog_nodes: FogRanges {
                count: n_fog,
                proc_cap: d::fog_proc(),
                mem_cap: d::fog_mem(),
                stor_cap: d::fog_stor(),
                fsc_rate: d::fsc_rate(),
                prop_iot_ms: d::prop_iot(),
                prop_cloud_ms: d::prop_cloud(),
                link_rate_iot: d::link(),
                link_rate_cloud: d::link(),
            },
            cloud_servers: CloudRanges {
                count: n_cloud,
                proc_cap: d::cloud_proc(),
                mem_cap: d::cloud_mem(),
                stor_cap: d::cloud_stor(),
            },
            costs: CostSection::default(),
            optimizer: SwarmConfig::default(),
            simulation: SimulationSection::default(),
            traffic: d::traffic(),
            min_viol: MinViolConfig::default(),
        }
    }

    /// `exp1` (10 fog, 3 cloud, 40 services), `exp2` (10, 5, 50) and `exp3`
    /// (10, 5, 20 with 10 s reconfiguration for threshold sweeps).
    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        match name {
            "exp1" => Ok(Self::with_counts(10, 3, 40)),
            "exp2" => Ok(Self::with_counts(10, 5, 50)),
            "exp3" => {
                let mut c = Self::with_counts(10, 5, 20);
                c.simulation.tau_s = 10.0;
                c.simulation.n_intervals = 60;
                c.simulation.d_max_ms = Some(80.0);
                c.traffic.traffic_period_s = 10.0;
                Ok(c)
            }
            other => Err(ScenarioError::UnknownPreset(other.to_owned())),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let s = &self.services;
        check_spans!("services", s: proc_demand, mem_demand, stor_demand, request_size,
            response_size, qos_level, delay_threshold);
        let f = &self.fog_nodes;
        check_spans!("fog_nodes", f: proc_cap, mem_cap, stor_cap, fsc_rate, prop_iot_ms,
            prop_cloud_ms, link_rate_iot, link_rate_cloud);
        let c = &self.cloud_servers;
        check_spans!("cloud_servers", c: proc_cap, mem_cap, stor_cap);
        self.costs.c_viol.check("costs.c_viol")?;
        if self.services.qos_level.hi > 1.0 {
            return Err(ScenarioError::Invalid(
                "services.qos_level must lie in [0, 1]".into(),
            ));
        }
        if self.services.count > 0 && self.fog_nodes.count > 0 && self.cloud_servers.count == 0 {
            return Err(ScenarioError::Invalid(
                "fog traffic needs at least one cloud server to fall back on".into(),
            ));
        }
        if !(self.simulation.tau_s > 0.0) {
            return Err(ScenarioError::Invalid(
                "simulation.tau_s must be > 0".into(),
            ));
        }
        if let Some(d) = self.simulation.d_max_ms {
            if !(d > 0.0) {
                return Err(ScenarioError::Invalid(
                    "simulation.d_max_ms must be > 0".into(),
                ));
            }
        }
        self.optimizer
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.traffic.validate().map_err(ScenarioError::Trace)?;
        Ok(())
    }

    /// Samples every machine and service attribute with the scenario seed.
    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let fr = &self.fog_nodes;
        let fog_nodes: Vec<FogNodeSpec> = (0..fr.count)
            .map(|id| FogNodeSpec {
                id,
                proc_cap: fr.proc_cap.sample(&mut rng),
                mem_cap: fr.mem_cap.sample(&mut rng),
                stor_cap: fr.stor_cap.sample(&mut rng),
                fsc_rate: fr.fsc_rate.sample(&mut rng),
                prop_iot_ms: fr.prop_iot_ms.sample(&mut rng),
                prop_cloud_ms: fr.prop_cloud_ms.sample(&mut rng),
                link_rate_iot: fr.link_rate_iot.sample(&mut rng),
                link_rate_cloud: fr.link_rate_cloud.sample(&mut rng),
            })
            .collect();
        let cr = &self.cloud_servers;
        let cloud_servers: Vec<CloudServerSpec> = (0..cr.count)
            .map(|id| CloudServerSpec {
                id,
                proc_cap: cr.proc_cap.sample(&mut rng),
                mem_cap: cr.mem_cap.sample(&mut rng),
                stor_cap: cr.stor_cap.sample(&mut rng),
            })
            .collect();
        let sr = &self.services;
        let services: Vec<ServiceSpec> = (0..sr.count)
            .map(|id| ServiceSpec {
                id,
                proc_demand: sr.proc_demand.sample(&mut rng),
                mem_demand: sr.mem_demand.sample(&mut rng),
                stor_demand: sr.stor_demand.sample(&mut rng),
                request_size: sr.request_size.sample(&mut rng),
                response_size: sr.response_size.sample(&mut rng),
                qos_level: sr.qos_level.sample(&mut rng),
                delay_threshold: sr.delay_threshold.sample(&mut rng),
            })
            .collect();
        let n_cloud = cloud_servers.len();
        let offload = Matrix::from_fn(services.len(), fog_nodes.len(), |_, _| {
            rng.random_range(0..n_cloud.max(1))
        });
        let topology = Topology::new(fog_nodes, cloud_servers, services, offload)?;

        let c = &self.costs;
        let rates = CostRates {
            c_proc: c.c_proc,
            c_stor_fog: c.c_stor_fog,
            c_stor_cloud: c.c_stor_cloud,
            c_comm_fc: c.c_comm_fc,
            c_comm_fsc: c.c_comm_fsc,
            c_viol: (0..topology.n_services())
                .map(|_| c.c_viol.sample(&mut rng))
                .collect(),
            c_wrong: c.c_wrong,
            c_delay: c.c_delay,
            c_deploy: c.c_deploy,
            impact_coefficient: c.impact_coefficient,
            tau_s: self.simulation.tau_s,
            infeasibility_penalty: c.infeasibility_penalty,
        };
        rates
            .validate(topology.n_services())
            .map_err(ScenarioError::Invalid)?;

        let d_max_ms = self
            .simulation
            .d_max_ms
            .unwrap_or_else(|| (D_MAX_THRESHOLD_FACTOR * topology.max_delay_threshold()).max(1.0));
        Ok(Scenario {
            topology,
            rates,
            swarm: self.optimizer.clone(),
            delay: DelayParams {
                d_max_ms,
                startup_ms: self.simulation.startup_ms,
            },
            tau_s: self.simulation.tau_s,
            traffic: self.traffic.clone(),
            n_intervals: self.simulation.n_intervals,
            min_viol: self.min_viol,
            seed: self.seed,
        })
    }
}

/// A sampled, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub rates: CostRates,
    pub swarm: SwarmConfig,
    pub delay: DelayParams,
    pub tau_s: f64,
    pub traffic: SynthConfig,
    pub n_intervals: usize,
    pub min_viol: MinViolConfig,
    pub seed: u64,
}

impl Scenario {
    /// Synthetic schedule from the scenario's traffic section and seed.
    pub fn synthetic_schedule(&self) -> Result<TraceSchedule, ScenarioError> {
        Ok(synth_trace(
            &self.topology,
            self.n_intervals,
            self.seed,
            &self.traffic,
        )?)
    }

    /// Copy with every delay threshold replaced by `threshold_ms`.
    pub fn with_threshold(&self, threshold_ms: f64) -> Self {
        let mut s = self.clone();
        for svc in &mut s.topology.services {
            svc.delay_threshold = threshold_ms;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::all_cloud;

    #[test]
    fn presets_have_table_counts() {
        for (name, f, c, s) in [
            ("exp1", 10, 3, 40),
            ("exp2", 10, 5, 50),
            ("exp3", 10, 5, 20),
        ] {
            let sc = ScenarioConfig::preset(name).unwrap().build().unwrap();
            assert_eq!(sc.topology.n_fog(), f);
            assert_eq!(sc.topology.n_cloud(), c);
            assert_eq!(sc.topology.n_services(), s);
        }
        assert!(matches!(
            ScenarioConfig::preset("exp9"),
            Err(ScenarioError::UnknownPreset(_))
        ));
    }

    #[test]
    fn sampled_values_stay_in_ranges() {
        for seed in 0..5 {
            let mut cfg = ScenarioConfig::preset("exp2").unwrap();
            cfg.seed = seed;
            let sc = cfg.build().unwrap();
            let t = &sc.topology;
            assert!(t
                .fog_nodes
                .iter()
                .all(|n| (800.0..=1300.0).contains(&n.proc_cap)));
            assert!(t
                .cloud_servers
                .iter()
                .all(|k| (16000.0..=26000.0).contains(&k.proc_cap)));
            assert!(t
                .services
                .iter()
                .all(|s| (10.0..=15.0).contains(&s.delay_threshold)));
            assert!(t
                .services
                .iter()
                .all(|s| (0.8..=0.99).contains(&s.qos_level)));
            assert!(t
                .services
                .iter()
                .all(|s| (50.0..=200.0).contains(&s.proc_demand)));
            assert!(sc.rates.c_viol.iter().all(|c| (100.0..=200.0).contains(c)));
            assert_eq!(sc.delay.d_max_ms, 10.0 * t.max_delay_threshold());
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let cfg = ScenarioConfig::preset("exp1").unwrap();
        assert_eq!(cfg.build().unwrap(), cfg.build().unwrap());
        let other = ScenarioConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(
            cfg.build().unwrap().topology,
            other.build().unwrap().topology
        );
    }

    #[test]
    fn presets_are_cloud_feasible() {
        for name in ["exp1", "exp2", "exp3"] {
            for seed in 0..3 {
                let cfg = ScenarioConfig {
                    seed,
                    ..ScenarioConfig::preset(name).unwrap()
                };
                let sc = cfg.build().unwrap();
                let sched = sc.synthetic_schedule().unwrap();
                for snap in &sched.snapshots {
                    all_cloud(&sc.topology, snap).unwrap();
                }
            }
        }
    }

    #[test]
    fn minimal_file_and_missing_keys() {
        let text =
            "seed = 3\n[services]\ncount = 4\n[fog_nodes]\ncount = 2\n[cloud_servers]\ncount = 1\n";
        let sc = ScenarioConfig::from_toml(text).unwrap().build().unwrap();
        assert_eq!(sc.topology.dimensions(), 8);
        assert_eq!(sc.swarm, SwarmConfig::default());

        let missing = "[services]\ncount = 4\n[fog_nodes]\n[cloud_servers]\ncount = 1\n";
        let err = ScenarioConfig::from_toml(missing).unwrap_err().to_string();
        assert!(err.contains("count"), "{err}");
        let no_section = "[services]\ncount = 4\n[fog_nodes]\ncount = 1\n";
        let err = ScenarioConfig::from_toml(no_section)
            .unwrap_err()
            .to_string();
        assert!(err.contains("cloud_servers"), "{err}");
    }

    #[test]
    fn inverted_range_names_its_key() {
        let text = "[services]\ncount = 1\ndelay_threshold = [15.0, 10.0]\n[fog_nodes]\ncount = 1\n[cloud_servers]\ncount = 1\n";
        let err = ScenarioConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("services.delay_threshold"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::preset("exp3").unwrap();
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn threshold_override() {
        let sc = ScenarioConfig::preset("exp3").unwrap().build().unwrap();
        let swept = sc.with_threshold(42.0);
        assert!(swept
            .topology
            .services
            .iter()
            .all(|s| s.delay_threshold == 42.0));
        assert_eq!(swept.delay, sc.delay);
    }
}
