//! Aggregated per-interval traffic: CSV ingestion, emission, and synthetic
//! generators.
//!
//! The trace format is one row per `(interval, fog node, service)`:
//!
//! ```text
//! # interval,fog_id,service_id,requests_per_sec
//! interval,fog_id,service_id,requests_per_sec
//! 0,1,2,15.5
//! ```
//!
//! The header is optional and `#` lines are comments. Repeated keys are
//! summed and pairs that never appear have rate zero.

use crate::matrix::Matrix;
use crate::model::Topology;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Read;
use thiserror::Error;

/// Seconds between two consecutive trace updates in the reference capture.
pub const DEFAULT_TRAFFIC_PERIOD_S: f64 = 60.0;

pub const TRACE_HEADER: &str = "interval,fog_id,service_id,requests_per_sec";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: unknown service id {id}")]
    UnknownService { line: u64, id: usize },
    #[error("line {line}: unknown fog node id {id}")]
    UnknownFogNode { line: u64, id: usize },
    #[error("no snapshots")]
    NoSnapshots,
    #[error("invalid generator setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Request rates `T(s, f)` in requests/s, indexed `[(service, fog)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSnapshot {
    pub interval: usize,
    pub rates: Matrix<f64>,
}

impl TrafficSnapshot {
    pub fn zeros(interval: usize, topology: &Topology) -> Self {
        Self {
            interval,
            rates: Matrix::zeros(topology.n_services(), topology.n_fog()),
        }
    }

    #[inline]
    pub fn rate(&self, service: usize, fog: usize) -> f64 {
        self.rates[(service, fog)]
    }

    pub fn total(&self) -> f64 {
        self.rates.sum()
    }

    /// Every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            interval: self.interval,
            rates: self.rates.map(|r| r * factor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSchedule {
    pub snapshots: Vec<TrafficSnapshot>,
    pub traffic_period_s: f64,
}

impl TraceSchedule {
    pub fn new(snapshots: Vec<TrafficSnapshot>, traffic_period_s: f64) -> Result<Self, TraceError> {
        if snapshots.is_empty() {
            return Err(TraceError::NoSnapshots);
        }
        if snapshots.windows(2).any(|w| w[0].interval >= w[1].interval) {
            return Err(TraceError::InvalidConfig(
                "snapshot intervals must be strictly increasing".into(),
            ));
        }
        if !(traffic_period_s > 0.0) {
            return Err(TraceError::InvalidConfig(
                "traffic period must be > 0".into(),
            ));
        }
        Ok(Self {
            snapshots,
            traffic_period_s,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Reads the CSV trace format described in the module docs.
pub fn parse_trace<R: Read>(
    input: R,
    topology: &Topology,
    traffic_period_s: f64,
) -> Result<TraceSchedule, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);

    let mut by_interval: BTreeMap<usize, Matrix<f64>> = BTreeMap::new();
    let mut first = true;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if std::mem::take(&mut first) && record.get(0).is_some_and(|f| f.parse::<usize>().is_err())
        {
            // header row
            continue;
        }
        if record.len() != 4 {
            return Err(TraceError::Malformed {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<usize, TraceError> {
            record[i].parse().map_err(|_| TraceError::Malformed {
                line,
                message: format!("{name} `{}` is not a non-negative integer", &record[i]),
            })
        };
        let interval = field(0, "interval")?;
        let fog = field(1, "fog_id")?;
        let service = field(2, "service_id")?;
        let rate: f64 = record[3].parse().map_err(|_| TraceError::Malformed {
            line,
            message: format!("rate `{}` is not a number", &record[3]),
        })?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(TraceError::Malformed {
                line,
                message: format!("rate {rate} must be finite and >= 0"),
            });
        }
        if fog >= topology.n_fog() {
            return Err(TraceError::UnknownFogNode { line, id: fog });
        }
        if service >= topology.n_services() {
            return Err(TraceError::UnknownService { line, id: service });
        }
        by_interval
            .entry(interval)
            .or_insert_with(|| Matrix::zeros(topology.n_services(), topology.n_fog()))
            [(service, fog)] += rate;
    }

    let snapshots = by_interval
        .into_iter()
        .map(|(interval, rates)| TrafficSnapshot { interval, rates })
        .collect();
    TraceSchedule::new(snapshots, traffic_period_s)
}

/// Writes every `(interval, fog, service)` entry, zeros included, so that
/// [`parse_trace`] reproduces the schedule exactly.
pub fn emit_trace(schedule: &TraceSchedule) -> String {
    let mut out = String::with_capacity(64 * schedule.len());
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for snap in &schedule.snapshots {
        for (service, fog, rate) in snap.rates.indexed() {
            out.push_str(&format!("{},{fog},{service},{rate}\n", snap.interval));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficProfile {
    Constant,
    Diurnal,
    Spiky,
}

impl std::str::FromStr for TrafficProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(Self::Constant),
            "diurnal" => Ok(Self::Diurnal),
            "spiky" => Ok(Self::Spiky),
            other => Err(format!(
                "unknown traffic profile `{other}` (expected constant, diurnal or spiky)"
            )),
        }
    }
}

/// Envelope and shape of the synthetic traffic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub profile: TrafficProfile,
    /// Mean requests/s of one (service, fog node) pair.
    pub base_rate: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    /// Pair weights are drawn from U(1 − h, 1 + h); 0 gives identical pairs.
    pub heterogeneity: f64,
    /// Relative sinusoid amplitude for diurnal and spiky profiles.
    pub amplitude: f64,
    /// Sinusoid period in intervals.
    pub period_intervals: usize,
    /// Per (fog node, interval) burst probability for the spiky profile.
    pub spike_prob: f64,
    pub spike_factor: f64,
    pub traffic_period_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            profile: TrafficProfile::Diurnal,
            base_rate: 1.0,
            min_rate: 0.0,
            max_rate: f64::INFINITY,
            heterogeneity: 0.8,
            amplitude: 0.4,
            period_intervals: 120,
            spike_prob: 0.05,
            spike_factor: 2.0,
            traffic_period_s: DEFAULT_TRAFFIC_PERIOD_S,
        }
    }
}

impl SynthConfig {
    pub fn constant(rate: f64) -> Self {
        Self {
            profile: TrafficProfile::Constant,
            base_rate: rate,
            heterogeneity: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let err = |m: &str| Err(TraceError::InvalidConfig(m.to_string()));
        if !(self.base_rate >= 0.0) {
            return err("base_rate must be >= 0");
        }
        if !(self.min_rate >= 0.0 && self.min_rate <= self.max_rate) {
            return err("need 0 <= min_rate <= max_rate");
        }
        if !(0.0..=1.0).contains(&self.heterogeneity) {
            return err("heterogeneity must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return err("amplitude must lie in [0, 1]");
        }
        if self.period_intervals == 0 {
            return err("period_intervals must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.spike_prob) || !(self.spike_factor >= 0.0) {
            return err("spike_prob must lie in [0, 1] and spike_factor >= 0");
        }
        Ok(())
    }
}

/// Deterministic synthetic schedule of `n_intervals` snapshots.
pub fn synth_trace(
    topology: &Topology,
    n_intervals: usize,
    seed: u64,
    config: &SynthConfig,
) -> Result<TraceSchedule, TraceError> {
    config.validate()?;
    if n_intervals == 0 {
        return Err(TraceError::NoSnapshots);
    }
    let (n_s, n_f) = (topology.n_services(), topology.n_fog());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = config.heterogeneity;
    let weights = Matrix::from_fn(n_s, n_f, |_, _| {
        if h > 0.0 {
            rng.random_range(1.0 - h..=1.0 + h)
        } else {
            1.0
        }
    });
    let phases: Vec<f64> = (0..n_f).map(|_| rng.random_range(0.0..TAU)).collect();

    let mut snapshots = Vec::with_capacity(n_intervals);
    for t in 0..n_intervals {
        let node_factor: Vec<f64> = (0..n_f)
            .map(|f| {
                let wave = 1.0
                    + config.amplitude
                        * (TAU * t as f64 / config.period_intervals as f64 + phases[f]).sin();
                match config.profile {
                    TrafficProfile::Constant => 1.0,
                    TrafficProfile::Diurnal => wave,
                    TrafficProfile::Spiky => {
                        if rng.random::<f64>() < config.spike_prob {
                            wave * config.spike_factor
                        } else {
                            wave
                        }
                    }
                }
            })
            .collect();
        let rates = Matrix::from_fn(n_s, n_f, |s, f| {
            (config.base_rate * weights[(s, f)] * node_factor[f])
                .clamp(config.min_rate, config.max_rate)
        });
        snapshots.push(TrafficSnapshot { interval: t, rates });
    }
    TraceSchedule::new(snapshots, config.traffic_period_s)
}

/// Seeded service weights, one column per fog node, each column summing to 1.
pub fn service_weights(n_services: usize, n_fog: usize, seed: u64) -> Matrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Matrix::from_fn(n_services, n_fog, |_, _| rng.random::<f64>() + 1e-3);
    for f in 0..n_fog {
        let total = w.col_sum(f);
        for s in 0..n_services {
            w[(s, f)] /= total;
        }
    }
    w
}

/// Spreads per-fog-node aggregate rates (`node_rates[t][f]`) across services
/// with weights drawn once from `seed`.
pub fn split_node_traffic(
    node_rates: &[Vec<f64>],
    topology: &Topology,
    seed: u64,
    traffic_period_s: f64,
) -> Result<TraceSchedule, TraceError> {
    let (n_s, n_f) = (topology.n_services(), topology.n_fog());
    let weights = service_weights(n_s, n_f, seed);
    let snapshots = node_rates
        .iter()
        .enumerate()
        .map(|(t, row)| {
            if row.len() != n_f {
                return Err(TraceError::InvalidConfig(format!(
                    "interval {t} has {} node rates, topology has {n_f} fog nodes",
                    row.len()
                )));
            }
            Ok(TrafficSnapshot {
                interval: t,
                rates: Matrix::from_fn(n_s, n_f, |s, f| row[f] * weights[(s, f)]),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    TraceSchedule::new(snapshots, traffic_period_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use proptest::prelude::*;
    use rand::Rng;

    fn topo() -> Topology {
        fixtures::topology(3, 2, 1)
    }

    #[test]
    fn parses_single_line() {
        let s = parse_trace("0,1,2,15.5\n".as_bytes(), &topo(), 60.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.snapshots[0].rates[(2, 1)], 15.5);
        assert_eq!(s.snapshots[0].total(), 15.5);
    }

    #[test]
    fn header_comments_and_blank_lines() {
        let input =
            "# capture A\ninterval,fog_id,service_id,requests_per_sec\n\n3,0,0,1\n1,1,1,2.5\n";
        let s = parse_trace(input.as_bytes(), &topo(), 60.0).unwrap();
        assert_eq!(
            s.snapshots.iter().map(|x| x.interval).collect::<Vec<_>>(),
            [1, 3]
        );
        assert_eq!(s.snapshots[0].rate(1, 1), 2.5);
        assert_eq!(s.snapshots[1].rate(0, 0), 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_trace("".as_bytes(), &topo(), 60.0).unwrap_err();
        assert_eq!(err.to_string(), "no snapshots");
        let err = parse_trace("# only a comment\n".as_bytes(), &topo(), 60.0).unwrap_err();
        assert!(matches!(err, TraceError::NoSnapshots));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_trace("0,0,0,1\n0,0,x,1\n".as_bytes(), &topo(), 60.0).unwrap_err();
        assert!(
            matches!(err, TraceError::Malformed { line: 2, .. }),
            "{err}"
        );
        let err = parse_trace("0,0,0,1\n0,0,0\n".as_bytes(), &topo(), 60.0).unwrap_err();
        assert!(
            matches!(err, TraceError::Malformed { line: 2, .. }),
            "{err}"
        );
        let err = parse_trace("0,0,0,-1\n".as_bytes(), &topo(), 60.0).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 1, .. }));
        let err = parse_trace("0,0,3,1\n".as_bytes(), &topo(), 60.0).unwrap_err();
        assert!(matches!(err, TraceError::UnknownService { line: 1, id: 3 }));
        let err = parse_trace("0,2,0,1\n".as_bytes(), &topo(), 60.0).unwrap_err();
        assert!(matches!(err, TraceError::UnknownFogNode { line: 1, id: 2 }));
    }

    #[test]
    fn duplicate_keys_sum_like_an_accumulation_oracle() {
        let t = topo();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut lines = Vec::new();
        for _ in 0..200 {
            let (i, f, s) = (
                rng.random_range(0..4usize),
                rng.random_range(0..2usize),
                rng.random_range(0..3usize),
            );
            let r = (rng.random_range(0..1000u32) as f64) / 8.0;
            lines.push((i, f, s, r));
        }
        let csv: String = lines
            .iter()
            .map(|(i, f, s, r)| format!("{i},{f},{s},{r}\n"))
            .collect();
        let parsed = parse_trace(csv.as_bytes(), &t, 60.0).unwrap();

        // one-pass accumulation over a shuffled copy
        let mut shuffled = lines.clone();
        for k in (1..shuffled.len()).rev() {
            shuffled.swap(k, rng.random_range(0..=k));
        }
        let mut acc = BTreeMap::<(usize, usize, usize), f64>::new();
        for (i, f, s, r) in shuffled {
            *acc.entry((i, s, f)).or_default() += r;
        }
        for snap in &parsed.snapshots {
            for (s, f, &v) in snap.rates.indexed() {
                let expect = acc.get(&(snap.interval, s, f)).copied().unwrap_or(0.0);
                assert_eq!(v, expect, "interval {} s {s} f {f}", snap.interval);
            }
        }
    }

    #[test]
    fn constant_profile_is_flat() {
        let t = fixtures::topology(4, 3, 2);
        let s = synth_trace(&t, 5, 1, &SynthConfig::constant(10.0)).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s
            .snapshots
            .iter()
            .all(|x| x.rates.iter().all(|&r| r == 10.0)));
    }

    #[test]
    fn synth_is_deterministic() {
        let t = fixtures::topology(4, 3, 2);
        for profile in [TrafficProfile::Diurnal, TrafficProfile::Spiky] {
            let cfg = SynthConfig {
                profile,
                ..SynthConfig::default()
            };
            assert_eq!(
                synth_trace(&t, 30, 9, &cfg).unwrap(),
                synth_trace(&t, 30, 9, &cfg).unwrap()
            );
            assert_ne!(
                synth_trace(&t, 30, 9, &cfg).unwrap(),
                synth_trace(&t, 30, 10, &cfg).unwrap()
            );
        }
    }

    #[test]
    fn diurnal_period_mean_matches_base_rate() {
        let t = fixtures::topology(2, 3, 1);
        let cfg = SynthConfig {
            base_rate: 7.0,
            heterogeneity: 0.0,
            amplitude: 0.6,
            period_intervals: 48,
            ..SynthConfig::default()
        };
        let s = synth_trace(&t, 48, 3, &cfg).unwrap();
        // trapezoid integration of the generated series over one period
        for f in 0..3 {
            let series: Vec<f64> = s.snapshots.iter().map(|x| x.rate(0, f)).collect();
            let n = series.len();
            let closed = series[0];
            let mut area = 0.0;
            for k in 0..n {
                let next = if k + 1 < n { series[k + 1] } else { closed };
                area += 0.5 * (series[k] + next);
            }
            let mean = area / n as f64;
            assert!((mean - 7.0).abs() <= 0.07, "node {f}: mean {mean}");
        }
    }

    #[test]
    fn rates_respect_envelope() {
        let t = fixtures::topology(5, 4, 2);
        let cfg = SynthConfig {
            profile: TrafficProfile::Spiky,
            base_rate: 10.0,
            min_rate: 4.0,
            max_rate: 14.0,
            spike_prob: 0.3,
            ..SynthConfig::default()
        };
        let s = synth_trace(&t, 50, 2, &cfg).unwrap();
        assert!(s
            .snapshots
            .iter()
            .flat_map(|x| x.rates.iter())
            .all(|&r| (4.0..=14.0).contains(&r)));
    }

    #[test]
    fn proportional_split_preserves_node_totals() {
        let t = fixtures::topology(6, 3, 1);
        let node_rates = vec![vec![10.0, 0.0, 3.5], vec![1.0, 2.0, 4.0]];
        let s = split_node_traffic(&node_rates, &t, 5, 60.0).unwrap();
        for (snap, row) in s.snapshots.iter().zip(&node_rates) {
            for (f, want) in row.iter().enumerate() {
                assert!((snap.rates.col_sum(f) - want).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn emit_parse_roundtrip(seed in any::<u64>(), n in 1usize..6) {
            let t = fixtures::topology(3, 4, 2);
            let cfg = SynthConfig { profile: TrafficProfile::Spiky, base_rate: 12.3, ..SynthConfig::default() };
            let s = synth_trace(&t, n, seed, &cfg).unwrap();
            let back = parse_trace(emit_trace(&s).as_bytes(), &t, s.traffic_period_s).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn snapshot_total_matches_column_sums(seed in any::<u64>()) {
            let t = fixtures::topology(5, 4, 2);
            let s = synth_trace(&t, 3, seed, &SynthConfig::default()).unwrap();
            for snap in &s.snapshots {
                let mut oracle = 0.0;
                for f in 0..4 {
                    for sv in 0..5 {
                        oracle += snap.rates.as_slice()[sv * 4 + f];
                    }
                }
                let by_cols: f64 = (0..4).map(|f| snap.rates.col_sum(f)).sum();
                prop_assert!((by_cols - oracle).abs() <= 1e-9 * oracle.max(1.0));
                prop_assert!((snap.total() - oracle).abs() <= 1e-9 * oracle.max(1.0));
            }
        }
    }
}
