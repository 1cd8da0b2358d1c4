use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{PolicySpec, RunConfig};
use super::summary::{summarize, SummaryRow};
use crate::agent::GlcbAgent;
use crate::baselines::{LinearTs, Uniform};
use crate::envs::{TaskSource, TaskSpec};
use crate::error::{GlcbError, Result};
use crate::policy::Policy;
use crate::rng::{stream, Stream};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One row of a per-step CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub seed: u64,
    pub t: u64,
    pub action: usize,
    pub reward: f64,
    pub cum_reward: f64,
    /// Best realized reward available this step.
    pub optimal_reward: f64,
}

/// A finished interaction run of one policy on one task for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub algorithm: String,
    pub task: String,
    pub seed: u64,
    pub records: Vec<StepRecord>,
    /// Running sum of expected-reward gaps to the best arm.
    pub expected_regret: Vec<f64>,
}

impl Episode {
    pub fn total_reward(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_reward)
    }

    /// Running sum of `optimal_reward - reward`.
    pub fn realized_regret(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.optimal_reward - r.reward;
                Some(*acc)
            })
            .collect()
    }
}

/// A task loaded once and shared by all of its seeds.
#[derive(Debug, Clone)]
pub struct LoadedTask {
    pub spec: TaskSpec,
    pub source: TaskSource,
}

impl LoadedTask {
    pub fn load(spec: &TaskSpec) -> Result<Self> {
        Ok(Self {
            spec: spec.clone(),
            source: TaskSource::load(spec)?,
        })
    }

    pub fn name(&self) -> &str {
        self.spec.display_name()
    }

    fn horizon(&self, run_override: Option<usize>) -> Option<usize> {
        run_override.or(self.spec.horizon)
    }
}

/// Fresh policy for one seed. GLCB gates come from the gating stream,
/// baseline randomness from the baseline stream.
pub fn build_policy(spec: &PolicySpec, task: &LoadedTask, seed: u64) -> Result<Box<dyn Policy>> {
    let src = &task.source;
    Ok(match spec {
        PolicySpec::Glcb(p) => {
            let cfg = p.resolve(task.name(), src.context_dim(), src.reward_kind())?;
            Box::new(GlcbAgent::new(
                cfg,
                src.num_actions(),
                &mut stream(seed, Stream::GatingInit),
            )?)
        }
        PolicySpec::Uniform(_) => Box::new(Uniform::new(src.num_actions(), stream(seed, Stream::BaselineSampling))?),
        PolicySpec::LinearTs(_) => Box::new(LinearTs::new(
            spec.linear_ts_config().expect("linear_ts spec"),
            src.context_dim(),
            src.num_actions(),
            stream(seed, Stream::BaselineSampling),
        )?),
    })
}

/// Runs select → reward → observe until the task's horizon.
pub fn run_episode(task: &LoadedTask, policy: &PolicySpec, seed: u64, horizon: Option<usize>) -> Result<Episode> {
    let mut env = task.source.instantiate(seed, task.horizon(horizon));
    let mut agent = build_policy(policy, task, seed)?;
    let mut records = Vec::with_capacity(env.horizon());
    let mut expected_regret = Vec::with_capacity(env.horizon());
    let (mut cum, mut regret) = (0.0, 0.0);
    while let Some(step) = env.next_step() {
        let action = agent.select(&step.context)?;
        let reward = *step.rewards.get(action).ok_or(GlcbError::ActionOutOfRange {
            action,
            num_actions: step.rewards.len(),
        })?;
        agent.observe(&step.context, action, reward)?;
        cum += reward;
        regret += step.expected_gap(action);
        records.push(StepRecord {
            seed,
            t: records.len() as u64 + 1,
            action,
            reward,
            cum_reward: cum,
            optimal_reward: step.optimal_reward(),
        });
        expected_regret.push(regret);
    }
    Ok(Episode {
        algorithm: policy.label().to_string(),
        task: task.name().to_string(),
        seed,
        records,
        expected_regret,
    })
}

/// Loads every task and checks every policy against it before anything runs.
pub fn prepare(config: &RunConfig) -> Result<Vec<LoadedTask>> {
    config.validate()?;
    let tasks = config.tasks.iter().map(LoadedTask::load).collect::<Result<Vec<_>>>()?;
    for task in &tasks {
        for policy in &config.policies {
            build_policy(policy, task, config.seeds[0])?;
        }
    }
    Ok(tasks)
}

fn pool(parallelism: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallelism {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| GlcbError::Config(format!("cannot start worker pool: {e}")))
}

fn jobs<'a>(config: &'a RunConfig, tasks: &'a [LoadedTask]) -> Vec<(&'a LoadedTask, &'a PolicySpec, u64)> {
    let mut out = Vec::new();
    for policy in &config.policies {
        for task in tasks {
            for &seed in &config.seeds {
                out.push((task, policy, seed));
            }
        }
    }
    out
}

/// Runs every (policy, task, seed) combination in memory, in config order.
pub fn execute(config: &RunConfig) -> Result<Vec<Episode>> {
    let tasks = prepare(config)?;
    let jobs = jobs(config, &tasks);
    pool(config.parallelism)?.install(|| {
        jobs.par_iter()
            .map(|(task, policy, seed)| run_episode(task, policy, *seed, config.horizon))
            .collect()
    })
}

pub fn step_file(dir: &Path, algorithm: &str, task: &str, seed: u64) -> PathBuf {
    dir.join(algorithm).join(task).join(format!("seed-{seed}.csv"))
}

pub fn write_steps(path: &Path, records: &[StepRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(["seed", "t", "action", "reward", "cum_reward", "optimal_reward"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_steps(path: &Path) -> Result<Vec<StepRecord>> {
    if !path.is_file() {
        return Err(GlcbError::Missing(format!("step file {}", path.display())));
    }
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// What a run directory contains, so it can be re-summarized later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seeds: Vec<u64>,
    pub horizon: Option<usize>,
    pub tasks: Vec<TaskSpec>,
    pub policies: Vec<PolicySpec>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(GlcbError::Missing(format!("{} (not a run directory?)", path.display())));
        }
        Ok(serde_json::from_reader(fs::File::open(path)?)?)
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: Vec<SummaryRow>,
}

/// Runs the config, writing per-step CSVs, a manifest and the summaries
/// under `config.out`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let tasks = prepare(config)?;
    let dir = config.out.clone();
    fs::create_dir_all(&dir)?;
    let jobs = jobs(config, &tasks);
    pool(config.parallelism)?.install(|| {
        jobs.par_iter().try_for_each(|(task, policy, seed)| {
            let ep = run_episode(task, policy, *seed, config.horizon)?;
            write_steps(&step_file(&dir, &ep.algorithm, &ep.task, *seed), &ep.records)
        })
    })?;
    let manifest = Manifest {
        seeds: config.seeds.clone(),
        horizon: config.horizon,
        tasks: config.tasks.clone(),
        policies: config.policies.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    let summary = summarize(&dir)?;
    Ok(RunOutput { dir, summary })
}
