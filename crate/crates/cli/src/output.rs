//! Result files. Every writer is deterministic in its inputs, so equal runs
//! give byte-identical files.

use anyhow::{Context, Result};
use fogprov::sim::{
    write_metrics_csv, ComparisonRow, IntervalMetrics, Policy, RunResult, SweepPoint, TrialRecord,
};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json(path: &Path, value: serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Per-interval series with one column per policy, averaged over seeds.
fn series(runs: &[Vec<RunResult>], metric: fn(&IntervalMetrics) -> f64) -> String {
    let mut out = String::from("interval");
    for group in runs {
        write!(out, ",{}", group[0].policy).unwrap();
    }
    out.push('\n');
    let n = runs[0][0].per_interval.len();
    for i in 0..n {
        write!(out, "{}", runs[0][0].per_interval[i].interval).unwrap();
        for group in runs {
            let mean = group
                .iter()
                .map(|r| metric(&r.per_interval[i]))
                .sum::<f64>()
                / group.len() as f64;
            write!(out, ",{mean}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Metrics CSV per run, cost and delay series per interval, and the
/// aggregates of every run. `runs` is grouped by policy.
pub fn write_runs(dir: &Path, runs: &[Vec<RunResult>]) -> Result<()> {
    for r in runs.iter().flatten() {
        let path = dir.join(format!("metrics_{}_seed{}.csv", r.policy, r.seed));
        let file =
            File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        write_metrics_csv(&r.per_interval, BufWriter::new(file))?;
    }
    write_text(
        &dir.join("cost_series.csv"),
        &series(runs, |m| m.total_cost),
    )?;
    write_text(
        &dir.join("delay_series.csv"),
        &series(runs, |m| m.avg_service_delay_ms),
    )?;
    let aggregates: Vec<_> = runs
        .iter()
        .flatten()
        .map(|r| serde_json::json!({ "policy": r.policy, "seed": r.seed, "aggregates": r.aggregates }))
        .collect();
    write_json(&dir.join("runs.json"), aggregates.into())?;

    let mut text = String::new();
    for r in runs.iter().flatten() {
        let a = &r.aggregates;
        writeln!(
            text,
            "{:<10} seed {:<3} delay {:>8.3} ms  violation {:>6.2} %  cost {:>14.3}  fog {:>6.2}  cloud {:>6.2}",
            r.policy.name(), r.seed, a.avg_service_delay_ms, a.delay_violation_pct, a.total_cost,
            a.n_fog_deployments, a.n_cloud_deployments
        )
        .unwrap();
    }
    print!("{text}");
    write_text(&dir.join("summary.txt"), &text)
}

pub fn write_comparison(dir: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut csv = String::from(
        "policy,runs,avg_service_delay_ms,avg_service_delay_ms_std,delay_violation_pct,\
         delay_violation_pct_std,total_cost,total_cost_std,n_fog_deployments,n_cloud_deployments\n",
    );
    let mut text = String::new();
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.policy.name(),
            r.runs,
            r.avg_service_delay_ms.mean,
            r.avg_service_delay_ms.std,
            r.delay_violation_pct.mean,
            r.delay_violation_pct.std,
            r.total_cost.mean,
            r.total_cost.std,
            r.n_fog_deployments.mean,
            r.n_cloud_deployments.mean
        )
        .unwrap();
        writeln!(
            text,
            "{:<10} mean of {}: delay {:.3} ± {:.3} ms  violation {:.2} %  cost {:.3}",
            r.policy.name(),
            r.runs,
            r.avg_service_delay_ms.mean,
            r.avg_service_delay_ms.std,
            r.delay_violation_pct.mean,
            r.total_cost.mean
        )
        .unwrap();
    }
    print!("{text}");
    write_text(&dir.join("comparison.csv"), &csv)?;
    write_json(&dir.join("summary.json"), serde_json::to_value(rows)?)
}

/// One row per (policy, threshold) in long format.
pub fn write_sweep(dir: &Path, curves: &[(Policy, Vec<SweepPoint>)]) -> Result<()> {
    let mut csv = String::from(
        "policy,threshold_ms,avg_service_delay_ms,delay_violation_pct,n_fog_deployments,n_cloud_deployments,total_cost\n",
    );
    for (policy, points) in curves {
        for p in points {
            let a = &p.result.aggregates;
            writeln!(
                csv,
                "{policy},{},{},{},{},{},{}",
                p.threshold_ms,
                a.avg_service_delay_ms,
                a.delay_violation_pct,
                a.n_fog_deployments,
                a.n_cloud_deployments,
                a.total_cost
            )
            .unwrap();
        }
    }
    print!("{csv}");
    write_text(&dir.join("sweep.csv"), &csv)
}

pub fn write_search(dir: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut csv = String::from(
        "trial,gamma,n_particles,avg_service_delay_ms,delay_violation_pct,total_cost\n",
    );
    for r in records {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.trial,
            r.gamma,
            r.n_particles,
            r.avg_service_delay_ms,
            r.delay_violation_pct,
            r.total_cost
        )
        .unwrap();
    }
    write_text(&dir.join("search.csv"), &csv)?;
    let best = records
        .iter()
        .min_by(|a, b| a.total_cost.total_cmp(&b.total_cost));
    if let Some(b) = best {
        println!(
            "best of {}: gamma {} particles {} cost {:.3} delay {:.3} ms",
            records.len(),
            b.gamma,
            b.n_particles,
            b.total_cost,
            b.avg_service_delay_ms
        );
    }
    write_json(
        &dir.join("summary.json"),
        serde_json::json!({ "best": best, "trials": records }),
    )
}
