//! Bandit tasks: the synthetic wheel, a finite-context Bernoulli task and
//! CSV-backed classification/regression adapters.

mod dataset;
mod synthetic;
mod wheel;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GlcbError, Result};
use crate::rng::{stream, Stream};

pub use dataset::{ClassificationBandit, Dataset, DatasetKind, RegressionBandit};
pub use synthetic::FiniteContextBandit;
pub use wheel::{wheel_means, wheel_step, WheelBandit, WheelConfig};

/// Horizon cap for dataset tasks.
pub const MAX_DATASET_HORIZON: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardKind {
    Bernoulli,
    Continuous { r_min: f64, r_max: f64 },
}

/// One interaction round: the context and every action's reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub context: Vec<f64>,
    /// Realized reward of each action.
    pub rewards: Vec<f64>,
    /// Expected reward of each action (equal to `rewards` for dataset tasks).
    pub means: Vec<f64>,
}

impl Step {
    /// Best realized reward this round.
    pub fn optimal_reward(&self) -> f64 {
        self.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Expected reward lost by playing `action` instead of the best arm.
    pub fn expected_gap(&self, action: usize) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max) - self.means[action]
    }
}

pub trait BanditTask: Send {
    fn num_actions(&self) -> usize;
    fn context_dim(&self) -> usize;
    fn reward_kind(&self) -> RewardKind;
    fn horizon(&self) -> usize;
    /// Next round, or `None` once the horizon is reached.
    fn next_step(&mut self) -> Option<Step>;
}

/// `1` when the action names the true class.
pub fn classification_reward(label: usize, action: usize) -> f64 {
    if label == action {
        1.0
    } else {
        0.0
    }
}

/// Column-wise min-max scaling into `[0, 1]`; constant columns become zeros.
pub fn minmax_normalize(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let first = rows
        .first()
        .ok_or_else(|| GlcbError::Config("cannot normalize an empty matrix".into()))?;
    let d = first.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(GlcbError::Config(
            "matrix rows must be nonempty and equally long".into(),
        ));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in rows {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    Ok(rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let span = hi[j] - lo[j];
                    if span > 0.0 {
                        (v - lo[j]) / span
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

/// Declarative description of a task, as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    /// Name used in output files; defaults to `name`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Class column for classification data (default: last column).
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    /// Per-action reward columns for regression data.
    #[serde(default)]
    pub reward_columns: Vec<String>,
    #[serde(default)]
    pub ignore_columns: Vec<String>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub wheel: WheelConfig,
}

impl TaskSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            label: None,
            path: None,
            label_column: None,
            categorical_columns: Vec::new(),
            reward_columns: Vec::new(),
            ignore_columns: Vec::new(),
            horizon: None,
            wheel: WheelConfig::default(),
        }
    }

    pub fn with_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn display_name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

const CLASSIFICATION_TASKS: [&str; 5] = ["classification", "statlog", "adult", "census", "covertype"];
const REGRESSION_TASKS: [&str; 3] = ["regression", "financial", "jester"];

/// A loaded task description from which per-seed instances are cut.
/// Dataset matrices are shared read-only between instances.
#[derive(Debug, Clone)]
pub enum TaskSource {
    Wheel(WheelConfig),
    TwoContext,
    Dataset(Arc<Dataset>),
}

impl TaskSource {
    pub fn load(spec: &TaskSpec) -> Result<Self> {
        let name = spec.name.as_str();
        if name == "wheel" {
            spec.wheel.validate()?;
            return Ok(TaskSource::Wheel(spec.wheel.clone()));
        }
        if name == "two_context" {
            return Ok(TaskSource::TwoContext);
        }
        let kind = if CLASSIFICATION_TASKS.contains(&name) {
            DatasetKind::Classification
        } else if REGRESSION_TASKS.contains(&name) {
            DatasetKind::Regression
        } else {
            return Err(GlcbError::UnknownTask(spec.name.clone()));
        };
        let path = spec
            .path
            .as_ref()
            .ok_or_else(|| GlcbError::Missing(format!("task {name:?} needs a CSV path")))?;
        Ok(TaskSource::Dataset(Arc::new(Dataset::from_csv(path, kind, spec)?)))
    }

    pub fn reward_kind(&self) -> RewardKind {
        match self {
            TaskSource::Wheel(cfg) => RewardKind::Continuous {
                r_min: cfg.r_min,
                r_max: cfg.r_max,
            },
            TaskSource::TwoContext => RewardKind::Bernoulli,
            TaskSource::Dataset(d) => d.reward_kind(),
        }
    }

    pub fn context_dim(&self) -> usize {
        match self {
            TaskSource::Wheel(_) | TaskSource::TwoContext => 2,
            TaskSource::Dataset(d) => d.context_dim(),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            TaskSource::Wheel(_) => 5,
            TaskSource::TwoContext => 2,
            TaskSource::Dataset(d) => d.num_actions(),
        }
    }

    /// Horizon when no override is given.
    pub fn default_horizon(&self) -> usize {
        match self {
            TaskSource::Wheel(_) => 5000,
            TaskSource::TwoContext => 10_000,
            TaskSource::Dataset(d) => d.len().min(MAX_DATASET_HORIZON),
        }
    }

    /// Fresh task for one seed. Dataset horizons never exceed the row count.
    pub fn instantiate(&self, seed: u64, horizon: Option<usize>) -> Box<dyn BanditTask> {
        let horizon = horizon.unwrap_or_else(|| self.default_horizon());
        let rng = stream(seed, Stream::Environment);
        match self {
            TaskSource::Wheel(cfg) => Box::new(WheelBandit::new(cfg.clone(), horizon, rng)),
            TaskSource::TwoContext => Box::new(FiniteContextBandit::two_context(horizon, rng)),
            TaskSource::Dataset(d) => match d.kind() {
                DatasetKind::Classification => Box::new(ClassificationBandit::new(d.clone(), horizon, rng)),
                DatasetKind::Regression => Box::new(RegressionBandit::new(d.clone(), horizon, rng)),
            },
        }
    }
}

pub fn make_task(spec: &TaskSpec, seed: u64) -> Result<Box<dyn BanditTask>> {
    Ok(TaskSource::load(spec)?.instantiate(seed, spec.horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_cases() {
        let m = minmax_normalize(&[vec![2.0, 0.0, 5.0], vec![4.0, 1.0, 5.0], vec![6.0, 0.5, 5.0]]).unwrap();
        assert_eq!(m.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.iter().map(|r| r[1]).collect::<Vec<_>>(), vec![0.0, 1.0, 0.5]);
        assert_eq!(m.iter().map(|r| r[2]).collect::<Vec<_>>(), vec![0.0, 0.0, 0.0]);
        assert!(minmax_normalize(&[]).is_err());
        assert!(minmax_normalize(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn classification_indicator() {
        assert_eq!(classification_reward(3, 3), 1.0);
        assert_eq!(classification_reward(3, 0), 0.0);
        assert_eq!((0..7).map(|a| classification_reward(4, a)).sum::<f64>(), 1.0);
    }

    #[test]
    fn unknown_and_pathless_tasks() {
        assert!(matches!(
            make_task(&TaskSpec::named("mushroom"), 0),
            Err(GlcbError::UnknownTask(_))
        ));
        assert!(matches!(
            make_task(&TaskSpec::named("statlog"), 0),
            Err(GlcbError::Missing(_))
        ));
        assert!(make_task(&TaskSpec::named("statlog").with_path("/nonexistent.csv"), 0).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..30)) {
            let once = minmax_normalize(&rows).unwrap();
            let twice = minmax_normalize(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
