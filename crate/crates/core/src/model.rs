//! Domain types shared by every other module: services, fog nodes, cloud
//! servers, the topology tying them together, and the placement state.

use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BITS_PER_BYTE: f64 = 8.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("service {id}: {reason}")]
    InvalidService { id: usize, reason: &'static str },
    #[error("fog node {id}: {reason}")]
    InvalidFogNode { id: usize, reason: &'static str },
    #[error("cloud server {id}: {reason}")]
    InvalidCloudServer { id: usize, reason: &'static str },
    #[error("offload target table is {rows}x{cols}, expected {services}x{fogs}")]
    OffloadShape {
        rows: usize,
        cols: usize,
        services: usize,
        fogs: usize,
    },
    #[error("offload target of service {service} at fog node {fog} is cloud {cloud}, only {n_cloud} exist")]
    OffloadTarget {
        service: usize,
        fog: usize,
        cloud: usize,
        n_cloud: usize,
    },
    #[error("index (service {service}, fog {fog}) outside {n_services}x{n_fog}")]
    IndexOutOfRange {
        service: usize,
        fog: usize,
        n_services: usize,
        n_fog: usize,
    },
    #[error("dimension index {index} outside [0, {len})")]
    DimensionOutOfRange { index: usize, len: usize },
    #[error("placement is {got:?}, topology needs {expected:?}")]
    PlacementShape {
        got: (usize, usize),
        expected: (usize, usize),
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub id: usize,
    /// Million instructions per request.
    pub proc_demand: f64,
    /// Bytes of RAM.
    pub mem_demand: f64,
    /// Bytes of container image / disk.
    pub stor_demand: f64,
    /// Bytes.
    pub request_size: f64,
    /// Bytes.
    pub response_size: f64,
    /// Fraction of time the delay must stay under `delay_threshold`.
    pub qos_level: f64,
    /// Milliseconds.
    pub delay_threshold: f64,
}

impl ServiceSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason| ModelError::InvalidService {
            id: self.id,
            reason,
        };
        if !(self.proc_demand > 0.0) {
            return Err(bad("proc_demand must be > 0"));
        }
        if !(self.mem_demand > 0.0) {
            return Err(bad("mem_demand must be > 0"));
        }
        if !(self.stor_demand > 0.0) {
            return Err(bad("stor_demand must be > 0"));
        }
        if !(self.request_size >= 0.0 && self.response_size >= 0.0) {
            return Err(bad("message sizes must be >= 0"));
        }
        if !(self.qos_level > 0.0 && self.qos_level < 1.0) {
            return Err(bad("qos_level must lie in (0, 1)"));
        }
        if !(self.delay_threshold > 0.0) {
            return Err(bad("delay_threshold must be > 0"));
        }
        Ok(())
    }

    /// Bytes moved per request, both directions.
    pub fn message_bytes(&self) -> f64 {
        self.request_size + self.response_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogNodeSpec {
    pub id: usize,
    /// MIPS.
    pub proc_cap: f64,
    /// Bytes.
    pub mem_cap: f64,
    /// Bytes.
    pub stor_cap: f64,
    /// Image-store to node transfer rate, bytes/s.
    pub fsc_rate: f64,
    /// One-way IoT to fog propagation, ms.
    pub prop_iot_ms: f64,
    /// One-way fog to cloud propagation, ms.
    pub prop_cloud_ms: f64,
    /// bits/s.
    pub link_rate_iot: f64,
    /// bits/s.
    pub link_rate_cloud: f64,
}

impl FogNodeSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let values = [
            self.proc_cap,
            self.mem_cap,
            self.stor_cap,
            self.fsc_rate,
            self.prop_iot_ms,
            self.prop_cloud_ms,
            self.link_rate_iot,
            self.link_rate_cloud,
        ];
        if values.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(ModelError::InvalidFogNode {
                id: self.id,
                reason: "capacities, rates and delays must be finite and > 0",
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudServerSpec {
    pub id: usize,
    /// MIPS.
    pub proc_cap: f64,
    /// Bytes.
    pub mem_cap: f64,
    /// Bytes.
    pub stor_cap: f64,
}

impl CloudServerSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if [self.proc_cap, self.mem_cap, self.stor_cap]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            Ok(())
        } else {
            Err(ModelError::InvalidCloudServer {
                id: self.id,
                reason: "capacities must be finite and > 0",
            })
        }
    }
}

/// Fog nodes, cloud servers, services, and the per-service offload table
/// `offload_target[(s, f)]` naming the cloud server that receives traffic of
/// service `s` rejected by fog node `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub fog_nodes: Vec<FogNodeSpec>,
    pub cloud_servers: Vec<CloudServerSpec>,
    pub services: Vec<ServiceSpec>,
    pub offload_target: Matrix<usize>,
}

impl Topology {
    pub fn new(
        fog_nodes: Vec<FogNodeSpec>,
        cloud_servers: Vec<CloudServerSpec>,
        services: Vec<ServiceSpec>,
        offload_target: Matrix<usize>,
    ) -> Result<Self, ModelError> {
        let topology = Self {
            fog_nodes,
            cloud_servers,
            services,
            offload_target,
        };
        topology.validate()?;
        Ok(topology)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.services.iter().try_for_each(ServiceSpec::validate)?;
        self.fog_nodes.iter().try_for_each(FogNodeSpec::validate)?;
        self.cloud_servers
            .iter()
            .try_for_each(CloudServerSpec::validate)?;
        let (rows, cols) = self.offload_target.shape();
        if rows != self.n_services() || cols != self.n_fog() {
            return Err(ModelError::OffloadShape {
                rows,
                cols,
                services: self.n_services(),
                fogs: self.n_fog(),
            });
        }
        for (service, fog, &cloud) in self.offload_target.indexed() {
            if cloud >= self.n_cloud() {
                return Err(ModelError::OffloadTarget {
                    service,
                    fog,
                    cloud,
                    n_cloud: self.n_cloud(),
                });
            }
        }
        Ok(())
    }

    pub fn n_services(&self) -> usize {
        self.services.len()
    }

    pub fn n_fog(&self) -> usize {
        self.fog_nodes.len()
    }

    pub fn n_cloud(&self) -> usize {
        self.cloud_servers.len()
    }

    /// `h_s(f)`.
    #[inline]
    pub fn offload(&self, service: usize, fog: usize) -> usize {
        self.offload_target[(service, fog)]
    }

    pub fn dimensions(&self) -> usize {
        self.n_services() * self.n_fog()
    }

    pub fn max_delay_threshold(&self) -> f64 {
        self.services
            .iter()
            .map(|s| s.delay_threshold)
            .fold(0.0, f64::max)
    }
}

/// Binary fog matrix `P` (|S|×|F|) and cloud matrix `Q` (|S|×|C|) at
/// interval `timestamp`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementState {
    pub fog: Matrix<u8>,
    pub cloud: Matrix<u8>,
    pub timestamp: usize,
}

impl PlacementState {
    pub fn is_on_fog(&self, service: usize, fog: usize) -> bool {
        self.fog[(service, fog)] == 1
    }

    pub fn is_on_cloud(&self, service: usize, cloud: usize) -> bool {
        self.cloud[(service, cloud)] == 1
    }

    pub fn fog_deployments(&self) -> usize {
        self.fog.iter().filter(|&&b| b == 1).count()
    }

    pub fn cloud_deployments(&self) -> usize {
        self.cloud.iter().filter(|&&b| b == 1).count()
    }

    pub fn check_shape(&self, topology: &Topology) -> Result<(), ModelError> {
        let expected = (topology.n_services(), topology.n_fog());
        if self.fog.shape() != expected {
            return Err(ModelError::PlacementShape {
                got: self.fog.shape(),
                expected,
            });
        }
        let expected = (topology.n_services(), topology.n_cloud());
        if self.cloud.shape() != expected {
            return Err(ModelError::PlacementShape {
                got: self.cloud.shape(),
                expected,
            });
        }
        Ok(())
    }

    /// Flattened fog matrix, i.e. a particle position.
    pub fn to_position(&self) -> Vec<u8> {
        self.fog.as_slice().to_vec()
    }
}

/// All-zero `P` and `Q` at interval 0.
pub fn new_placement(topology: &Topology) -> PlacementState {
    PlacementState {
        fog: Matrix::zeros(topology.n_services(), topology.n_fog()),
        cloud: Matrix::zeros(topology.n_services(), topology.n_cloud()),
        timestamp: 0,
    }
}

/// Row-major position index `s·|F| + f`.
pub fn flatten_index(
    service: usize,
    fog: usize,
    n_services: usize,
    n_fog: usize,
) -> Result<usize, ModelError> {
    if service >= n_services || fog >= n_fog {
        return Err(ModelError::IndexOutOfRange {
            service,
            fog,
            n_services,
            n_fog,
        });
    }
    Ok(service * n_fog + fog)
}

/// Inverse of [`flatten_index`]: `(⌊i/|F|⌋, i − |F|·⌊i/|F|⌋)`.
pub fn unflatten_index(
    index: usize,
    n_services: usize,
    n_fog: usize,
) -> Result<(usize, usize), ModelError> {
    let len = n_services * n_fog;
    if index >= len {
        return Err(ModelError::DimensionOutOfRange { index, len });
    }
    let service = index / n_fog;
    Ok((service, index - n_fog * service))
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_placement_shapes() {
        let p = new_placement(&fixtures::topology(2, 2, 1));
        assert_eq!(p.fog.shape(), (2, 2));
        assert_eq!(p.cloud.shape(), (2, 1));
        assert_eq!(p.timestamp, 0);
        assert_eq!(p.fog_deployments() + p.cloud_deployments(), 0);

        let p = new_placement(&fixtures::topology(40, 10, 3));
        assert_eq!(p.fog.shape(), (40, 10));
        assert_eq!(p.cloud.shape(), (40, 3));

        let p = new_placement(&fixtures::topology(0, 10, 3));
        assert_eq!(p.fog.shape(), (0, 10));
        assert!(p.fog.as_slice().is_empty());
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten_index(2, 3, 5, 10).unwrap(), 23);
        assert_eq!(unflatten_index(23, 5, 10).unwrap(), (2, 3));
        assert_eq!(flatten_index(0, 0, 1, 4).unwrap(), 0);
        assert!(flatten_index(5, 0, 5, 10).is_err());
        assert!(flatten_index(0, 10, 5, 10).is_err());
        assert!(unflatten_index(50, 5, 10).is_err());
    }

    #[test]
    fn flatten_is_bijection_by_enumeration() {
        let (n_services, n_fog) = (5, 7);
        let mut seen = vec![false; n_services * n_fog];
        for s in 0..n_services {
            for f in 0..n_fog {
                let i = flatten_index(s, f, n_services, n_fog).unwrap();
                assert!(!seen[i], "index {i} hit twice");
                seen[i] = true;
                assert_eq!(unflatten_index(i, n_services, n_fog).unwrap(), (s, f));
            }
        }
        assert!(seen.iter().all(|&b| b));
        assert_eq!(seen.len(), 35);
    }

    #[test]
    fn topology_rejects_bad_offload() {
        let mut t = fixtures::topology(2, 2, 1);
        t.offload_target[(1, 1)] = 3;
        assert!(matches!(
            t.validate(),
            Err(ModelError::OffloadTarget { cloud: 3, .. })
        ));
    }

    #[test]
    fn service_invariants() {
        let mut s = fixtures::service(0, 10.0);
        assert!(s.validate().is_ok());
        s.qos_level = 1.0;
        assert!(s.validate().is_err());
        s.qos_level = 0.9;
        s.stor_demand = 0.0;
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn flatten_roundtrip(n_services in 1usize..=50, n_fog in 1usize..=50, seed in any::<u64>()) {
            let s = (seed as usize) % n_services;
            let f = (seed as usize / 7) % n_fog;
            let i = flatten_index(s, f, n_services, n_fog).unwrap();
            prop_assert!(i < n_services * n_fog);
            prop_assert_eq!(unflatten_index(i, n_services, n_fog).unwrap(), (s, f));
        }

        #[test]
        fn placement_serde_roundtrip(bits in proptest::collection::vec(0u8..=1, 12), t in 0usize..1000) {
            let p = PlacementState {
                fog: Matrix::from_vec(3, 4, bits.clone()),
                cloud: Matrix::from_vec(3, 2, bits[..6].to_vec()),
                timestamp: t,
            };
            let json = serde_json::to_string(&p).unwrap();
            let back: PlacementState = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
