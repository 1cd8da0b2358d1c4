use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::runner::{read_steps, step_file, Manifest};
use crate::error::{GlcbError, Result};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const REGRET_FILE: &str = "regret.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub task: String,
    pub seeds: usize,
    pub mean_cum_reward: f64,
    pub stderr: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretPoint {
    pub algorithm: String,
    pub task: String,
    pub t: u64,
    pub mean_regret: f64,
    pub stderr: f64,
}

/// Sample mean and standard error (`stdev / √n`; zero for one value).
pub fn mean_stderr(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(GlcbError::Missing("no values to summarize".into()));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Per-task ranks (1 = highest mean). Exact ties share the smaller rank
/// and the following rank is skipped.
pub fn assign_ranks(rows: &mut [SummaryRow]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in rows.iter() {
        if !seen.insert((r.algorithm.clone(), r.task.clone())) {
            return Err(GlcbError::DuplicateEntry {
                algorithm: r.algorithm.clone(),
                task: r.task.clone(),
            });
        }
    }
    let means: Vec<(String, f64)> = rows.iter().map(|r| (r.task.clone(), r.mean_cum_reward)).collect();
    for r in rows.iter_mut() {
        r.rank = 1 + means
            .iter()
            .filter(|(task, m)| *task == r.task && *m > r.mean_cum_reward)
            .count();
    }
    Ok(())
}

/// Ranks per (algorithm, task) plus each algorithm's mean rank over the
/// tasks it ran.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub tasks: Vec<String>,
    pub algorithms: Vec<String>,
    pub ranks: BTreeMap<(String, String), usize>,
    pub mean_rank: BTreeMap<String, f64>,
}

pub fn rank_table(rows: &[SummaryRow]) -> Result<RankTable> {
    let mut rows = rows.to_vec();
    assign_ranks(&mut rows)?;
    let mut tasks = Vec::new();
    let mut algorithms = Vec::new();
    for r in &rows {
        if !tasks.contains(&r.task) {
            tasks.push(r.task.clone());
        }
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
    }
    let ranks: BTreeMap<_, _> = rows
        .iter()
        .map(|r| ((r.algorithm.clone(), r.task.clone()), r.rank))
        .collect();
    let mean_rank = algorithms
        .iter()
        .map(|a| {
            let mine: Vec<f64> = rows
                .iter()
                .filter(|r| &r.algorithm == a)
                .map(|r| r.rank as f64)
                .collect();
            (a.clone(), mine.iter().sum::<f64>() / mine.len() as f64)
        })
        .collect();
    Ok(RankTable {
        tasks,
        algorithms,
        ranks,
        mean_rank,
    })
}

impl RankTable {
    /// Algorithms ordered by mean rank, then name.
    pub fn sorted_algorithms(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.algorithms.iter().map(String::as_str).collect();
        v.sort_by(|a, b| self.mean_rank[*a].total_cmp(&self.mean_rank[*b]).then(a.cmp(b)));
        v
    }
}

impl fmt::Display for RankTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .algorithms
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("algorithm".len());
        write!(f, "{:<width$}", "algorithm")?;
        for t in &self.tasks {
            write!(f, "  {t:>w$}", w = t.len().max(4))?;
        }
        writeln!(f, "  {:>9}", "mean_rank")?;
        for a in self.sorted_algorithms() {
            write!(f, "{a:<width$}")?;
            for t in &self.tasks {
                let w = t.len().max(4);
                match self.ranks.get(&(a.to_string(), t.clone())) {
                    Some(r) => write!(f, "  {r:>w$}")?,
                    None => write!(f, "  {:>w$}", "-")?,
                }
            }
            writeln!(f, "  {:>9.2}", self.mean_rank[a])?;
        }
        Ok(())
    }
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Recomputes `summary.csv` and `regret.csv` from the per-step files of a
/// run directory. Every seed listed in the manifest must be present.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    let manifest = Manifest::read(dir)?;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for policy in &manifest.policies {
        let algorithm = policy.label();
        for task in manifest.tasks.iter().map(|t| t.display_name()) {
            let mut finals = Vec::new();
            let mut regrets: Vec<Vec<f64>> = Vec::new();
            for &seed in &manifest.seeds {
                let records = read_steps(&step_file(dir, algorithm, task, seed))?;
                finals.push(records.last().map_or(0.0, |r| r.cum_reward));
                regrets.push(
                    records
                        .iter()
                        .scan(0.0, |acc, r| {
                            *acc += r.optimal_reward - r.reward;
                            Some(*acc)
                        })
                        .collect(),
                );
            }
            let (mean, stderr) = mean_stderr(&finals)?;
            rows.push(SummaryRow {
                algorithm: algorithm.to_string(),
                task: task.to_string(),
                seeds: finals.len(),
                mean_cum_reward: mean,
                stderr,
                rank: 0,
            });
            let len = regrets.iter().map(Vec::len).min().unwrap_or(0);
            for i in 0..len {
                let at: Vec<f64> = regrets.iter().map(|c| c[i]).collect();
                let (mean_regret, stderr) = mean_stderr(&at)?;
                curves.push(RegretPoint {
                    algorithm: algorithm.to_string(),
                    task: task.to_string(),
                    t: i as u64 + 1,
                    mean_regret,
                    stderr,
                });
            }
        }
    }
    assign_ranks(&mut rows)?;
    write_summary(&dir.join(SUMMARY_FILE), &rows)?;
    let mut w = csv::Writer::from_writer(fs::File::create(dir.join(REGRET_FILE))?);
    for p in &curves {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(rows)
}
