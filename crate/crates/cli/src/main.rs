mod output;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fogprov::scenario::{Scenario, ScenarioConfig};
use fogprov::sim::{self, Policy, SearchSpace};
use fogprov::traffic::{parse_trace, TraceSchedule};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "fogprov",
    version,
    about = "Fog service provisioning simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy with one seed.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "hbpcro")]
        policy: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate several policies over several seeds.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated policy names.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "all_cloud,min_viol,min_cost,bpso,hbpcro"
        )]
        policy: Vec<Policy>,
        /// Number of seeds; runs use seeds 0..N.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Rerun with every service's delay threshold set to each value.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_value = "hbpcro")]
        policy: Vec<Policy>,
        /// `start:stop:step` in ms, or a comma-separated list.
        #[arg(long, default_value = "1:100:5")]
        thresholds: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random search over the collision budget and swarm size.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Inclusive `lo:hi`.
        #[arg(long, default_value = "2:10")]
        gamma: String,
        /// Inclusive `lo:hi`.
        #[arg(long, default_value = "5:50")]
        particles: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a preset as a scenario file.
    Scenario {
        #[arg(long, default_value = "exp1")]
        preset: String,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario: exp1, exp2 or exp3.
    #[arg(long)]
    preset: Option<String>,
    /// Traffic trace CSV; without it traffic is synthesized from the scenario.
    #[arg(long, conflicts_with = "synthetic")]
    trace: Option<PathBuf>,
    #[arg(long)]
    synthetic: bool,
    /// Output directory.
    #[arg(long, env = "FOGPROV_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

impl CommonArgs {
    fn load(&self) -> Result<(Scenario, TraceSchedule)> {
        let config = match (&self.scenario, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => ScenarioConfig::preset("exp1")?,
        };
        let scenario = config.build()?;
        let schedule = match &self.trace {
            Some(path) => {
                let file = File::open(path)
                    .with_context(|| format!("cannot open trace {}", path.display()))?;
                parse_trace(
                    BufReader::new(file),
                    &scenario.topology,
                    scenario.traffic.traffic_period_s,
                )
                .with_context(|| format!("bad trace {}", path.display()))?
            }
            None => scenario.synthetic_schedule()?,
        };
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok((scenario, schedule))
    }
}

fn parse_thresholds(text: &str) -> Result<Vec<f64>> {
    let nums = |parts: &[&str]| -> Result<Vec<f64>> {
        parts
            .iter()
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad number `{p}`"))
            })
            .collect()
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [_] => nums(&text.split(',').collect::<Vec<_>>()),
        [_, _, _] => {
            let v = nums(&parts)?;
            let (start, stop, step) = (v[0], v[1], v[2]);
            if step.is_nan() || step <= 0.0 || stop < start {
                bail!("threshold range `{text}` needs start <= stop and a positive step");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| start + step * i as f64).collect())
        }
        _ => bail!("thresholds must be `start:stop:step` or a comma list, got `{text}`"),
    }
}

fn parse_span<T: std::str::FromStr>(text: &str, name: &str) -> Result<(T, T)> {
    let (lo, hi) = text
        .split_once(':')
        .with_context(|| format!("--{name} must be `lo:hi`"))?;
    let num = |s: &str| {
        s.trim()
            .parse::<T>()
            .map_err(|_| anyhow::anyhow!("--{name}: bad number `{s}`"))
    };
    Ok((num(lo)?, num(hi)?))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            common,
            policy,
            seed,
        } => {
            let (sc, schedule) = common.load()?;
            let result = sim::run(&sc, &schedule, policy, seed)?;
            output::write_runs(&common.out, &[vec![result]])?;
        }
        Command::Compare {
            common,
            policy,
            seeds,
        } => {
            let (sc, schedule) = common.load()?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let cmp = sim::compare(&sc, &schedule, &policy, &seeds)?;
            output::write_runs(&common.out, &cmp.runs)?;
            output::write_comparison(&common.out, &cmp.rows)?;
        }
        Command::Sweep {
            common,
            policy,
            thresholds,
            seed,
        } => {
            let thresholds = parse_thresholds(&thresholds)?;
            let (sc, schedule) = common.load()?;
            let curves = policy
                .iter()
                .map(|&p| {
                    Ok((
                        p,
                        sim::threshold_sweep(&sc, &schedule, p, &thresholds, seed)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            output::write_sweep(&common.out, &curves)?;
        }
        Command::Search {
            common,
            trials,
            gamma,
            particles,
            seed,
        } => {
            let space = SearchSpace {
                gamma: parse_span(&gamma, "gamma")?,
                n_particles: parse_span(&particles, "particles")?,
            };
            let (sc, schedule) = common.load()?;
            let records = sim::hyperparam_search(&sc, &schedule, space, trials, seed)?;
            output::write_search(&common.out, &records)?;
        }
        Command::Scenario { preset } => print!("{}", ScenarioConfig::preset(&preset)?.to_toml()),
    }
    Ok(())
}
