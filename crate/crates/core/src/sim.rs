//! Reconfiguration loop and experiment drivers.
//!
//! A run walks a [`TraceSchedule`]. At time zero and then every `τ` seconds
//! the policy picks a new fog matrix from the current snapshot and the
//! previous placement; between reconfigurations the fog matrix is frozen and
//! the cloud side follows the release rule for whichever snapshot is live.
//! Interval costs are priced over the snapshot's duration, without the
//! infeasibility penalty, and deploy costs only appear on reconfiguration
//! intervals.

use crate::baselines::{all_cloud, min_cost, min_viol, BaselineError};
use crate::cost::{check_constraints, with_forced_cloud, CostBreakdown, CostModel, CostRates};
use crate::delay::{delay_report, deploy_delay};
use crate::matrix::Matrix;
use crate::model::PlacementState;
use crate::optimizer::{solve, Mode, SwarmConfig};
use crate::scenario::Scenario;
use crate::traffic::{TraceSchedule, TrafficSnapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("policy {policy} failed at interval {interval}: {source}")]
    Policy {
        policy: Policy,
        interval: usize,
        source: BaselineError,
    },
    #[error("unknown policy `{0}` (expected all_cloud, min_viol, min_cost, bpso or hbpcro)")]
    UnknownPolicy(String),
    #[error("{0}")]
    Invalid(String),
    #[error("metrics csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("metrics csv line {line}: {message}")]
    Malformed { line: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    AllCloud,
    MinViol,
    MinCost,
    Bpso,
    Hbpcro,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::AllCloud,
        Policy::MinViol,
        Policy::MinCost,
        Policy::Bpso,
        Policy::Hbpcro,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::AllCloud => "all_cloud",
            Policy::MinViol => "min_viol",
            Policy::MinCost => "min_cost",
            Policy::Bpso => "bpso",
            Policy::Hbpcro => "hbpcro",
        }
    }

    /// Uses the optimizer seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Policy::Bpso | Policy::Hbpcro)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "all_cloud" => Ok(Policy::AllCloud),
            "min_viol" => Ok(Policy::MinViol),
            "min_cost" => Ok(Policy::MinCost),
            "bpso" | "pure_bpso" => Ok(Policy::Bpso),
            "hbpcro" => Ok(Policy::Hbpcro),
            _ => Err(SimError::UnknownPolicy(s.to_owned())),
        }
    }
}

/// Fog matrix chosen by `policy` for the model's snapshot.
pub fn decide(
    policy: Policy,
    scenario: &Scenario,
    model: CostModel<'_>,
    seed: u64,
) -> Result<PlacementState, BaselineError> {
    let swarm = SwarmConfig {
        seed,
        ..scenario.swarm.clone()
    };
    Ok(match policy {
        Policy::AllCloud => all_cloud(model.topology, model.snapshot)?,
        Policy::MinViol => min_viol(&model, &scenario.min_viol),
        Policy::MinCost => min_cost(&model),
        Policy::Bpso => solve(&swarm, model, Mode::PurePso)?.placement,
        Policy::Hbpcro => solve(&swarm, model, Mode::Hybrid)?.placement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub interval: usize,
    pub reconfigured: bool,
    /// Offered load, requests/s.
    pub traffic: f64,
    /// Request-weighted mean delay.
    pub avg_service_delay_ms: f64,
    /// Request-weighted percentage of requests over their threshold.
    pub delay_violation_pct: f64,
    /// Mean delay over pairs with traffic, unweighted.
    pub unweighted_delay_ms: f64,
    pub unweighted_violation_pct: f64,
    pub total_cost: f64,
    pub cost_breakdown: CostBreakdown,
    pub n_fog_deployments: usize,
    pub n_cloud_deployments: usize,
    pub n_constraint_violations: usize,
}

/// Means of the per-interval metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub avg_service_delay_ms: f64,
    pub delay_violation_pct: f64,
    pub unweighted_delay_ms: f64,
    pub unweighted_violation_pct: f64,
    pub total_cost: f64,
    pub n_fog_deployments: f64,
    pub n_cloud_deployments: f64,
    pub reconfigurations: usize,
}

impl Aggregates {
    pub fn from_intervals(rows: &[IntervalMetrics]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&IntervalMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Self {
            avg_service_delay_ms: mean(|r| r.avg_service_delay_ms),
            delay_violation_pct: mean(|r| r.delay_violation_pct),
            unweighted_delay_ms: mean(|r| r.unweighted_delay_ms),
            unweighted_violation_pct: mean(|r| r.unweighted_violation_pct),
            total_cost: mean(|r| r.total_cost),
            n_fog_deployments: mean(|r| r.n_fog_deployments as f64),
            n_cloud_deployments: mean(|r| r.n_cloud_deployments as f64),
            reconfigurations: rows.iter().filter(|r| r.reconfigured).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: Policy,
    pub seed: u64,
    pub per_interval: Vec<IntervalMetrics>,
    pub aggregates: Aggregates,
    /// Fog matrix in force at the end of the run.
    #[serde(skip)]
    pub final_fog: Option<Matrix<u8>>,
}

/// Scenario rates repriced over `duration_s` instead of `τ`.
fn rates_over(rates: &CostRates, duration_s: f64) -> CostRates {
    CostRates {
        tau_s: duration_s,
        ..rates.clone()
    }
}

fn interval_metrics(
    scenario: &Scenario,
    snapshot: &TrafficSnapshot,
    placement: &PlacementState,
    prev: &PlacementState,
    rates: &CostRates,
    reconfigured: bool,
    stall_on_deploy: bool,
) -> IntervalMetrics {
    let t = &scenario.topology;
    let model = CostModel::new(t, snapshot, prev, rates, scenario.delay);
    let load = model.load(placement);
    let report = delay_report(placement, &load, t, &scenario.delay);
    let breakdown = model.evaluate_unpenalized(placement);

    let (mut w_delay, mut w_viol, mut u_delay, mut u_viol, mut traffic, mut pairs) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0usize);
    for s in 0..t.n_services() {
        for f in 0..t.n_fog() {
            let rate = snapshot.rate(s, f);
            if rate <= 0.0 {
                continue;
            }
            let mut d = report.service_delay_ms[(s, f)];
            if stall_on_deploy && placement.is_on_fog(s, f) && !prev.is_on_fog(s, f) {
                d += deploy_delay(&t.services[s], &t.fog_nodes[f], scenario.delay.startup_ms);
            }
            let v = report.violation_prob[(s, f)];
            w_delay += rate * d;
            w_viol += rate * v;
            u_delay += d;
            u_viol += v;
            traffic += rate;
            pairs += 1;
        }
    }
    let per = |x: f64, n: f64| if n > 0.0 { x / n } else { 0.0 };
    IntervalMetrics {
        interval: snapshot.interval,
        reconfigured,
        traffic,
        avg_service_delay_ms: per(w_delay, traffic),
        delay_violation_pct: 100.0 * per(w_viol, traffic),
        unweighted_delay_ms: per(u_delay, pairs as f64),
        unweighted_violation_pct: 100.0 * per(u_viol, pairs as f64),
        total_cost: breakdown.total,
        cost_breakdown: breakdown,
        n_fog_deployments: placement.fog_deployments(),
        n_cloud_deployments: placement.cloud_deployments(),
        n_constraint_violations: check_constraints(placement, &load, t).len(),
    }
}

/// Options that do not belong to the scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Count the deploy delay against requests of freshly deployed pairs.
    pub stall_on_deploy: bool,
}

pub fn run(
    scenario: &Scenario,
    schedule: &TraceSchedule,
    policy: Policy,
    seed: u64,
) -> Result<RunResult, SimError> {
    run_with(scenario, schedule, policy, seed, RunOptions::default())
}

pub fn run_with(
    scenario: &Scenario,
    schedule: &TraceSchedule,
    policy: Policy,
    seed: u64,
    options: RunOptions,
) -> Result<RunResult, SimError> {
    let t = &scenario.topology;
    if let Some(bad) = schedule
        .snapshots
        .iter()
        .find(|s| s.rates.shape() != (t.n_services(), t.n_fog()))
    {
        return Err(SimError::Invalid(format!(
            "snapshot {} is {:?}, topology needs {:?}",
            bad.interval,
            bad.rates.shape(),
            (t.n_services(), t.n_fog())
        )));
    }
    let period = schedule.traffic_period_s;
    let interval_rates = rates_over(&scenario.rates, period);
    let mut fog: Matrix<u8> = Matrix::zeros(t.n_services(), t.n_fog());
    let mut last_reconfig: Option<f64> = None;
    let mut per_interval = Vec::with_capacity(schedule.len());

    for snap in &schedule.snapshots {
        let now = snap.interval as f64 * period;
        let due = last_reconfig.is_none_or(|at| now - at >= scenario.tau_s - 1e-9);
        let prev = with_forced_cloud(fog.clone(), snap, t, snap.interval);
        if due {
            let model = CostModel::new(t, snap, &prev, &scenario.rates, scenario.delay);
            let next =
                decide(policy, scenario, model, seed).map_err(|source| SimError::Policy {
                    policy,
                    interval: snap.interval,
                    source,
                })?;
            fog = next.fog;
            last_reconfig = Some(now);
        }
        let placement = with_forced_cloud(fog.clone(), snap, t, snap.interval);
        let baseline = if due { &prev } else { &placement };
        per_interval.push(interval_metrics(
            scenario,
            snap,
            &placement,
            baseline,
            &interval_rates,
            due,
            options.stall_on_deploy,
        ));
    }

    Ok(RunResult {
        policy,
        seed,
        aggregates: Aggregates::from_intervals(&per_interval),
        per_interval,
        final_fog: Some(fog),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and sample standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: Policy,
    pub runs: usize,
    pub avg_service_delay_ms: Stat,
    pub delay_violation_pct: Stat,
    pub total_cost: Stat,
    pub n_fog_deployments: Stat,
    pub n_cloud_deployments: Stat,
}

impl ComparisonRow {
    pub fn from_runs(policy: Policy, runs: &[RunResult]) -> Self {
        let stat = |f: fn(&Aggregates) -> f64| {
            Stat::of(&runs.iter().map(|r| f(&r.aggregates)).collect::<Vec<_>>())
        };
        Self {
            policy,
            runs: runs.len(),
            avg_service_delay_ms: stat(|a| a.avg_service_delay_ms),
            delay_violation_pct: stat(|a| a.delay_violation_pct),
            total_cost: stat(|a| a.total_cost),
            n_fog_deployments: stat(|a| a.n_fog_deployments),
            n_cloud_deployments: stat(|a| a.n_cloud_deployments),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Runs grouped by policy, in seed order.
    pub runs: Vec<Vec<RunResult>>,
}

/// Runs each policy once per seed, in parallel.
pub fn compare(
    scenario: &Scenario,
    schedule: &TraceSchedule,
    policies: &[Policy],
    seeds: &[u64],
) -> Result<Comparison, SimError> {
    if policies.is_empty() || seeds.is_empty() {
        return Err(SimError::Invalid(
            "compare needs a policy and a seed".into(),
        ));
    }
    let jobs: Vec<(Policy, u64)> = policies
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let mut results = jobs
        .par_iter()
        .map(|&(p, s)| run(scenario, schedule, p, s))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    let runs: Vec<Vec<RunResult>> = policies
        .iter()
        .map(|_| results.by_ref().take(seeds.len()).collect())
        .collect();
    let rows = policies
        .iter()
        .zip(&runs)
        .map(|(&p, r)| ComparisonRow::from_runs(p, r))
        .collect();
    Ok(Comparison { rows, runs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub threshold_ms: f64,
    pub result: RunResult,
}

/// One run per threshold, with every service's threshold overridden. The
/// delay ceiling stays at the scenario's value.
pub fn threshold_sweep(
    scenario: &Scenario,
    schedule: &TraceSchedule,
    policy: Policy,
    thresholds: &[f64],
    seed: u64,
) -> Result<Vec<SweepPoint>, SimError> {
    if thresholds.is_empty() {
        return Err(SimError::Invalid(
            "threshold sweep needs at least one value".into(),
        ));
    }
    if let Some(bad) = thresholds.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(SimError::Invalid(format!(
            "threshold {bad} must be a positive number"
        )));
    }
    thresholds
        .par_iter()
        .map(|&th| {
            let result = run(&scenario.with_threshold(th), schedule, policy, seed)?;
            Ok(SweepPoint {
                threshold_ms: th,
                result,
            })
        })
        .collect()
}

/// Inclusive ranges for the random hyper-parameter search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub gamma: (u32, u32),
    pub n_particles: (usize, usize),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            gamma: (2, 10),
            n_particles: (5, 50),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub gamma: u32,
    pub n_particles: usize,
    pub avg_service_delay_ms: f64,
    pub delay_violation_pct: f64,
    pub total_cost: f64,
}

/// Seeded random search over `(γ, N)`; every trial is a full run.
pub fn hyperparam_search(
    scenario: &Scenario,
    schedule: &TraceSchedule,
    space: SearchSpace,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>, SimError> {
    let (g_lo, g_hi) = space.gamma;
    let (n_lo, n_hi) = space.n_particles;
    if g_lo > g_hi || n_lo > n_hi || n_lo < 2 {
        return Err(SimError::Invalid(format!(
            "bad search space: gamma {g_lo}..={g_hi}, particles {n_lo}..={n_hi} (need >= 2)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(u32, usize)> = (0..n_trials)
        .map(|_| (rng.random_range(g_lo..=g_hi), rng.random_range(n_lo..=n_hi)))
        .collect();
    draws
        .par_iter()
        .enumerate()
        .map(|(trial, &(gamma, n_particles))| {
            let mut sc = scenario.clone();
            sc.swarm.gamma = gamma;
            sc.swarm.n_particles = n_particles;
            let r = run(
                &sc,
                schedule,
                Policy::Hbpcro,
                seed.wrapping_add(trial as u64),
            )?;
            Ok(TrialRecord {
                trial,
                gamma,
                n_particles,
                avg_service_delay_ms: r.aggregates.avg_service_delay_ms,
                delay_violation_pct: r.aggregates.delay_violation_pct,
                total_cost: r.aggregates.total_cost,
            })
        })
        .collect()
}

const METRIC_COLUMNS: [&str; 12] = [
    "interval",
    "reconfigured",
    "traffic",
    "avg_service_delay_ms",
    "delay_violation_pct",
    "unweighted_delay_ms",
    "unweighted_violation_pct",
    "total_cost",
    "n_fog_deployments",
    "n_cloud_deployments",
    "n_constraint_violations",
    "n_violations_penalized",
];

/// Header of the per-interval metrics CSV.
pub fn metrics_header() -> Vec<String> {
    let mut h: Vec<String> = METRIC_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend(
        CostBreakdown::default()
            .terms()
            .iter()
            .map(|(n, _)| format!("cost_{n}")),
    );
    h
}

/// Writes one row per interval. Floats use the shortest exact
/// representation, so reading the file back is lossless.
pub fn write_metrics_csv<W: Write>(rows: &[IntervalMetrics], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(metrics_header())?;
    for r in rows {
        let b = &r.cost_breakdown;
        let mut rec = vec![
            r.interval.to_string(),
            u8::from(r.reconfigured).to_string(),
            r.traffic.to_string(),
            r.avg_service_delay_ms.to_string(),
            r.delay_violation_pct.to_string(),
            r.unweighted_delay_ms.to_string(),
            r.unweighted_violation_pct.to_string(),
            r.total_cost.to_string(),
            r.n_fog_deployments.to_string(),
            r.n_cloud_deployments.to_string(),
            r.n_constraint_violations.to_string(),
            b.n_violations.to_string(),
        ];
        rec.extend(b.terms().iter().map(|(_, v)| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<IntervalMetrics>, SimError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != metrics_header() {
        return Err(SimError::Malformed {
            line: 1,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| SimError::Malformed { line, message };
        let f = |i: usize| -> Result<f64, SimError> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", header[i])))
        };
        let u = |i: usize| -> Result<usize, SimError> {
            rec[i]
                .parse::<usize>()
                .map_err(|e| bad(format!("column {}: {e}", header[i])))
        };
        let terms: Vec<f64> = (12..header.len()).map(f).collect::<Result<_, _>>()?;
        let cost_breakdown = CostBreakdown {
            proc_fog: terms[0],
            stor_fog: terms[1],
            violation_fog: terms[2],
            comm_fc: terms[3],
            dep_fog: terms[4],
            wrong_fog: terms[5],
            delay_fog: terms[6],
            comm_ff: terms[7],
            utilization_fog: terms[8],
            proc_cloud: terms[9],
            stor_cloud: terms[10],
            n_violations: u(11)?,
            penalty: 0.0,
            total: f(7)?,
        };
        out.push(IntervalMetrics {
            interval: u(0)?,
            reconfigured: u(1)? == 1,
            traffic: f(2)?,
            avg_service_delay_ms: f(3)?,
            delay_violation_pct: f(4)?,
            unweighted_delay_ms: f(5)?,
            unweighted_violation_pct: f(6)?,
            total_cost: f(7)?,
            cost_breakdown,
            n_fog_deployments: u(8)?,
            n_cloud_deployments: u(9)?,
            n_constraint_violations: u(10)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ScenarioConfig, Span};
    use crate::traffic::{synth_trace, SynthConfig};

    fn small(seed: u64) -> Scenario {
        let mut cfg = ScenarioConfig::with_counts(3, 2, 4);
        cfg.seed = seed;
        cfg.services.proc_demand = Span::new(0.5, 2.0);
        cfg.optimizer.n_particles = 6;
        cfg.optimizer.max_iter = 40;
        cfg.simulation.tau_s = 120.0;
        cfg.simulation.n_intervals = 8;
        cfg.traffic.base_rate = 30.0;
        cfg.build().unwrap()
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert_eq!("pure_bpso".parse::<Policy>().unwrap(), Policy::Bpso);
        assert!("random".parse::<Policy>().is_err());
    }

    #[test]
    fn reconfigures_every_tau() {
        let sc = small(1);
        let sched = sc.synthetic_schedule().unwrap();
        let r = run(&sc, &sched, Policy::MinViol, 0).unwrap();
        let flags: Vec<bool> = r.per_interval.iter().map(|m| m.reconfigured).collect();
        assert_eq!(flags, [true, false, true, false, true, false, true, false]);

        let mut every = sc.clone();
        every.tau_s = sched.traffic_period_s;
        let r = run(&every, &sched, Policy::MinViol, 0).unwrap();
        assert_eq!(r.aggregates.reconfigurations, sched.len());
    }

    #[test]
    fn constant_traffic_gives_stable_placements() {
        let sc = small(2);
        let sched = synth_trace(&sc.topology, 6, 2, &SynthConfig::constant(20.0)).unwrap();
        for p in Policy::ALL {
            let r = run(&sc, &sched, p, 5).unwrap();
            let fogs: Vec<usize> = r.per_interval.iter().map(|m| m.n_fog_deployments).collect();
            assert!(fogs[1..].iter().all(|&n| n == fogs[1]), "{p}: {fogs:?}");
        }
    }

    #[test]
    fn aggregates_are_interval_means() {
        let sc = small(3);
        let sched = sc.synthetic_schedule().unwrap();
        let r = run(&sc, &sched, Policy::Hbpcro, 1).unwrap();
        let n = r.per_interval.len() as f64;
        let mut d = 0.0;
        let mut c = 0.0;
        for m in &r.per_interval {
            d += m.avg_service_delay_ms;
            c += m.total_cost;
            assert!((0.0..=100.0).contains(&m.delay_violation_pct));
            assert!(m.n_fog_deployments <= 12 && m.n_cloud_deployments <= 8);
        }
        assert!((r.aggregates.avg_service_delay_ms - d / n).abs() <= 1e-9 * (d / n).abs().max(1.0));
        assert!((r.aggregates.total_cost - c / n).abs() <= 1e-9 * (c / n).abs().max(1.0));
    }

    #[test]
    fn metrics_csv_round_trip() {
        let sc = small(4);
        let sched = sc.synthetic_schedule().unwrap();
        let r = run(&sc, &sched, Policy::MinCost, 0).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&r.per_interval, &mut buf).unwrap();
        let back = read_metrics_csv(buf.as_slice()).unwrap();
        assert_eq!(back, r.per_interval);
        assert!(read_metrics_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn compare_single_matches_run() {
        let sc = small(5);
        let sched = sc.synthetic_schedule().unwrap();
        let cmp = compare(&sc, &sched, &[Policy::AllCloud], &[3]).unwrap();
        let r = run(&sc, &sched, Policy::AllCloud, 3).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].total_cost.mean, r.aggregates.total_cost);
        assert_eq!(cmp.rows[0].total_cost.std, 0.0);
        assert_eq!(cmp.runs[0][0], r);
    }

    #[test]
    fn stall_flag_only_raises_delay() {
        let sc = small(6);
        let sched = sc.synthetic_schedule().unwrap();
        let a = run(&sc, &sched, Policy::MinViol, 0).unwrap();
        let b = run_with(
            &sc,
            &sched,
            Policy::MinViol,
            0,
            RunOptions {
                stall_on_deploy: true,
            },
        )
        .unwrap();
        assert!(b.aggregates.avg_service_delay_ms >= a.aggregates.avg_service_delay_ms);
        assert_eq!(a.aggregates.total_cost, b.aggregates.total_cost);
    }

    #[test]
    fn search_respects_ranges() {
        let sc = small(7);
        let sched = sc.synthetic_schedule().unwrap();
        let recs = hyperparam_search(
            &sc,
            &sched,
            SearchSpace {
                gamma: (2, 4),
                n_particles: (3, 6),
            },
            4,
            9,
        )
        .unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs
            .iter()
            .all(|r| (2..=4).contains(&r.gamma) && (3..=6).contains(&r.n_particles)));
        let one = hyperparam_search(&sc, &sched, SearchSpace::default(), 1, 9).unwrap();
        assert_eq!(one.len(), 1);
    }
}
