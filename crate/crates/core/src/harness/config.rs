use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{GlcbConfig, RewardMode};
use crate::baselines::LinearTsConfig;
use crate::envs::{RewardKind, TaskSpec};
use crate::error::{GlcbError, Result};
use crate::gating::BiasCentering;

/// Seeds used when a config names none.
pub const DEFAULT_SEED_COUNT: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Overrides every task's horizon (datasets are still capped at their size).
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the machine's available parallelism.
    #[serde(default)]
    pub parallelism: Option<usize>,
    pub tasks: Vec<TaskSpec>,
    pub policies: Vec<PolicySpec>,
}

fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEED_COUNT).collect()
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Bernoulli,
    Continuous,
}

/// GLCB hyperparameters; unset keys take the per-mode defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlcbParams {
    #[serde(default)]
    pub label: Option<String>,
    /// Required mode; defaults to whatever the task's rewards call for.
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub gln_network_shape: Option<Vec<usize>>,
    #[serde(default)]
    pub number_of_hyperplanes_per_unit: Option<usize>,
    #[serde(default)]
    pub ucb_exploration_bonus: Option<f64>,
    #[serde(default)]
    pub bias_scale: Option<f64>,
    #[serde(default)]
    pub bias_centering: Option<BiasCentering>,
    #[serde(default)]
    pub initial_learning_rate: Option<f64>,
    #[serde(default)]
    pub learning_rate_decay_parameter: Option<f64>,
    #[serde(default)]
    pub initial_switching_rate: Option<f64>,
    #[serde(default)]
    pub switching_rate_decay_parameter: Option<f64>,
    #[serde(default)]
    pub tree_depth: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformParams {
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearTsParams {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub noise_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Glcb(GlcbParams),
    Uniform(UniformParams),
    LinearTs(LinearTsParams),
}

impl PolicySpec {
    pub fn glcb() -> Self {
        PolicySpec::Glcb(GlcbParams::default())
    }

    pub fn uniform() -> Self {
        PolicySpec::Uniform(UniformParams::default())
    }

    pub fn linear_ts() -> Self {
        PolicySpec::LinearTs(LinearTsParams::default())
    }

    /// Algorithm name used in output paths and summaries.
    pub fn label(&self) -> &str {
        let (label, default) = match self {
            PolicySpec::Glcb(p) => (&p.label, "glcb"),
            PolicySpec::Uniform(p) => (&p.label, "uniform"),
            PolicySpec::LinearTs(p) => (&p.label, "linear_ts"),
        };
        label.as_deref().unwrap_or(default)
    }

    pub fn linear_ts_config(&self) -> Option<LinearTsConfig> {
        match self {
            PolicySpec::LinearTs(p) => {
                let d = LinearTsConfig::default();
                Some(LinearTsConfig {
                    lambda: p.lambda.unwrap_or(d.lambda),
                    noise_variance: p.noise_variance.unwrap_or(d.noise_variance),
                })
            }
            _ => None,
        }
    }
}

impl GlcbParams {
    /// Resolves the agent config for a task with the given context size and
    /// reward kind.
    pub fn resolve(&self, task: &str, context_dim: usize, reward: RewardKind) -> Result<GlcbConfig> {
        let label = self.label.as_deref().unwrap_or("glcb");
        let mismatch = |reason: String| GlcbError::PolicyMismatch {
            policy: label.to_string(),
            task: task.to_string(),
            reason,
        };
        let mut cfg = match (self.mode, reward) {
            (None | Some(ModeName::Bernoulli), RewardKind::Bernoulli) => {
                if self.tree_depth.is_some() {
                    return Err(mismatch("tree_depth only applies to continuous rewards".into()));
                }
                GlcbConfig::bernoulli(context_dim)
            }
            (None | Some(ModeName::Continuous), RewardKind::Continuous { r_min, r_max }) => {
                GlcbConfig::continuous(context_dim, r_min, r_max)
            }
            (Some(ModeName::Bernoulli), RewardKind::Continuous { .. }) => {
                return Err(mismatch("Bernoulli policy on a task with continuous rewards".into()))
            }
            (Some(ModeName::Continuous), RewardKind::Bernoulli) => {
                return Err(mismatch("continuous policy on a task with Bernoulli rewards".into()))
            }
        };
        if let Some(v) = &self.gln_network_shape {
            cfg.gln = cfg.gln.with_layer_widths(v.clone());
        }
        macro_rules! set {
            ($($key:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$key { cfg.$field = v; })*
            };
        }
        set! {
            number_of_hyperplanes_per_unit => planes_per_unit,
            ucb_exploration_bonus => exploration_c,
            bias_scale => bias_scale,
            bias_centering => centering,
            initial_learning_rate => lr_init,
            learning_rate_decay_parameter => lr_decay,
            initial_switching_rate => switching_init,
            switching_rate_decay_parameter => switching_decay,
        }
        if let (Some(d), RewardMode::Continuous { depth, .. }) = (self.tree_depth, &mut cfg.mode) {
            *depth = d;
        }
        cfg.validate().map_err(|e| mismatch(e.to_string()))?;
        Ok(cfg)
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s != ".."
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl RunConfig {
    pub fn new(tasks: Vec<TaskSpec>, policies: Vec<PolicySpec>) -> Self {
        Self {
            seeds: default_seeds(),
            horizon: None,
            out: default_out(),
            parallelism: None,
            tasks,
            policies,
        }
    }

    /// Parses TOML or JSON, chosen by extension (TOML when unknown).
    /// Relative dataset paths are resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text)?,
            _ => Self::from_toml(&text)?,
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for task in &mut cfg.tasks {
            if let Some(p) = &task.path {
                if p.is_relative() {
                    task.path = Some(base.join(p));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(GlcbError::Config("no seeds given".into()));
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(GlcbError::Config("seeds must be distinct".into()));
        }
        if self.tasks.is_empty() || self.policies.is_empty() {
            return Err(GlcbError::Config("need at least one task and one policy".into()));
        }
        if self.horizon == Some(0) || self.tasks.iter().any(|t| t.horizon == Some(0)) {
            return Err(GlcbError::Config("horizon must be positive".into()));
        }
        if self.parallelism == Some(0) {
            return Err(GlcbError::Config("parallelism must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for name in self.tasks.iter().map(|t| t.display_name()) {
            if !valid_name(name) {
                return Err(GlcbError::Config(format!(
                    "task label {name:?} is not a valid file name"
                )));
            }
            if !names.insert(name) {
                return Err(GlcbError::Config(format!("task label {name:?} appears twice")));
            }
        }
        let mut names = BTreeSet::new();
        for name in self.policies.iter().map(|p| p.label()) {
            if !valid_name(name) {
                return Err(GlcbError::Config(format!(
                    "policy label {name:?} is not a valid file name"
                )));
            }
            if !names.insert(name) {
                return Err(GlcbError::Config(format!("policy label {name:?} appears twice")));
            }
        }
        for p in &self.policies {
            if let Some(c) = p.linear_ts_config() {
                c.validate()?;
            }
        }
        Ok(())
    }
}

/// Parses `a..b` (half-open), `a..=b` (inclusive) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || GlcbError::Config(format!("cannot parse seeds {s:?}; expected a..b, a..=b or a list"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(GlcbError::Config(format!("seed range {s:?} is empty")));
    }
    Ok(seeds)
}
