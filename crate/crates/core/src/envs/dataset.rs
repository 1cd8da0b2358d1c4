use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{classification_reward, minmax_normalize, BanditTask, RewardKind, Step, TaskSpec};
use crate::error::{GlcbError, Result};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Classification,
    Regression,
}

/// A normalized dataset held in memory and shared between seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    kind: DatasetKind,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: Vec<String>,
    rewards: Vec<Vec<f64>>,
}

fn data_err(path: &Path, reason: impl Into<String>) -> GlcbError {
    GlcbError::Data {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Sorts category strings numerically when they all parse, else lexically.
fn ordered_categories(values: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().collect();
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    v
}

impl Dataset {
    /// Loads a headed, comma-separated file. Categorical columns are one-hot
    /// encoded in sorted category order; the result is min-max normalized.
    pub fn from_csv(path: &Path, kind: DatasetKind, spec: &TaskSpec) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| data_err(path, format!("no column named {name:?}")))
        };
        for name in spec.categorical_columns.iter().chain(&spec.ignore_columns) {
            column(name)?;
        }
        let mut targets: Vec<usize> = match kind {
            DatasetKind::Classification => vec![match &spec.label_column {
                Some(name) => column(name)?,
                None => headers
                    .len()
                    .checked_sub(1)
                    .ok_or_else(|| data_err(path, "no columns"))?,
            }],
            DatasetKind::Regression => {
                if spec.reward_columns.is_empty() {
                    return Err(data_err(path, "regression tasks need reward_columns"));
                }
                spec.reward_columns.iter().map(|n| column(n)).collect::<Result<_>>()?
            }
        };
        targets.dedup();
        let skipped: BTreeSet<usize> = spec
            .ignore_columns
            .iter()
            .map(|n| column(n))
            .collect::<Result<BTreeSet<_>>>()?;
        let categorical: BTreeSet<usize> = spec
            .categorical_columns
            .iter()
            .map(|n| column(n))
            .collect::<Result<_>>()?;
        let inputs: Vec<usize> = (0..headers.len())
            .filter(|j| !targets.contains(j) && !skipped.contains(j))
            .collect();
        if inputs.is_empty() {
            return Err(data_err(path, "no context columns left"));
        }

        let mut raw: Vec<Vec<String>> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(data_err(path, format!("row {} has {} fields", i + 1, rec.len())));
            }
            raw.push(rec.iter().map(|f| f.trim().to_string()).collect());
        }
        if raw.is_empty() {
            return Err(data_err(path, "no data rows"));
        }

        let mut levels: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for &j in inputs.iter().filter(|j| categorical.contains(j)) {
            levels.insert(j, ordered_categories(raw.iter().map(|r| r[j].clone()).collect()));
        }
        let parse = |i: usize, j: usize, s: &str| {
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                data_err(
                    path,
                    format!("row {}, column {:?}: not a number: {s:?}", i + 1, headers[j]),
                )
            })
        };
        let mut features = Vec::with_capacity(raw.len());
        for (i, row) in raw.iter().enumerate() {
            let mut x = Vec::new();
            for &j in &inputs {
                match levels.get(&j) {
                    Some(cats) => x.extend(cats.iter().map(|c| if *c == row[j] { 1.0 } else { 0.0 })),
                    None => x.push(parse(i, j, &row[j])?),
                }
            }
            features.push(x);
        }
        let features = minmax_normalize(&features)?;

        let (labels, classes, rewards) = match kind {
            DatasetKind::Classification => {
                let j = targets[0];
                let classes = ordered_categories(raw.iter().map(|r| r[j].clone()).collect());
                let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
                let labels = raw.iter().map(|r| index[r[j].as_str()]).collect();
                (labels, classes, Vec::new())
            }
            DatasetKind::Regression => {
                let mut rewards = Vec::with_capacity(raw.len());
                for (i, row) in raw.iter().enumerate() {
                    rewards.push(
                        targets
                            .iter()
                            .map(|&j| parse(i, j, &row[j]))
                            .collect::<Result<Vec<_>>>()?,
                    );
                }
                let lo = rewards.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                let hi = rewards.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = hi - lo;
                for r in rewards.iter_mut().flatten() {
                    *r = if span > 0.0 { (*r - lo) / span } else { 0.0 };
                }
                (Vec::new(), Vec::new(), rewards)
            }
        };
        Ok(Self {
            kind,
            features,
            labels,
            classes,
            rewards,
        })
    }

    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn num_actions(&self) -> usize {
        match self.kind {
            DatasetKind::Classification => self.classes.len(),
            DatasetKind::Regression => self.rewards[0].len(),
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn reward_kind(&self) -> RewardKind {
        match self.kind {
            DatasetKind::Classification => RewardKind::Bernoulli,
            DatasetKind::Regression => RewardKind::Continuous { r_min: 0.0, r_max: 1.0 },
        }
    }
}

/// Rows served without replacement in a seeded order.
struct RowOrder {
    order: Vec<usize>,
    next: usize,
}

impl RowOrder {
    fn new(n: usize, horizon: usize, mut rng: StreamRng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order.truncate(horizon.min(n));
        Self { order, next: 0 }
    }

    fn pop(&mut self) -> Option<usize> {
        let row = self.order.get(self.next).copied();
        self.next += 1;
        row
    }
}

pub struct ClassificationBandit {
    data: Arc<Dataset>,
    rows: RowOrder,
}

impl ClassificationBandit {
    pub fn new(data: Arc<Dataset>, horizon: usize, rng: StreamRng) -> Self {
        let rows = RowOrder::new(data.len(), horizon, rng);
        Self { data, rows }
    }

    /// Row indices in serving order.
    pub fn order(&self) -> &[usize] {
        &self.rows.order
    }
}

impl BanditTask for ClassificationBandit {
    fn num_actions(&self) -> usize {
        self.data.num_actions()
    }

    fn context_dim(&self) -> usize {
        self.data.context_dim()
    }

    fn reward_kind(&self) -> RewardKind {
        RewardKind::Bernoulli
    }

    fn horizon(&self) -> usize {
        self.rows.order.len()
    }

    fn next_step(&mut self) -> Option<Step> {
        let i = self.rows.pop()?;
        let label = self.data.labels[i];
        let rewards: Vec<f64> = (0..self.num_actions())
            .map(|a| classification_reward(label, a))
            .collect();
        Some(Step {
            context: self.data.features[i].clone(),
            means: rewards.clone(),
            rewards,
        })
    }
}

pub struct RegressionBandit {
    data: Arc<Dataset>,
    rows: RowOrder,
}

impl RegressionBandit {
    pub fn new(data: Arc<Dataset>, horizon: usize, rng: StreamRng) -> Self {
        let rows = RowOrder::new(data.len(), horizon, rng);
        Self { data, rows }
    }
}

impl BanditTask for RegressionBandit {
    fn num_actions(&self) -> usize {
        self.data.num_actions()
    }

    fn context_dim(&self) -> usize {
        self.data.context_dim()
    }

    fn reward_kind(&self) -> RewardKind {
        self.data.reward_kind()
    }

    fn horizon(&self) -> usize {
        self.rows.order.len()
    }

    fn next_step(&mut self) -> Option<Step> {
        let i = self.rows.pop()?;
        Some(Step {
            context: self.data.features[i].clone(),
            rewards: self.data.rewards[i].clone(),
            means: self.data.rewards[i].clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TaskSource;
    use std::collections::HashSet;
    use std::io::Write;

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    fn classification_csv(rows: usize, classes: usize) -> tempfile::NamedTempFile {
        let mut body = String::from("a,b,colour,class\n");
        for i in 0..rows {
            let colour = ["red", "green", "blue"][i % 3];
            body += &format!(
                "{},{},{},{}\n",
                i as f64 * 0.5,
                (i * 7 % 13) as f64,
                colour,
                i % classes + 1
            );
        }
        write_csv(&body)
    }

    fn spec(name: &str, path: &Path) -> TaskSpec {
        let mut s = TaskSpec::named(name).with_path(path);
        s.categorical_columns = vec!["colour".into()];
        s
    }

    #[test]
    fn statlog_style_load() {
        let f = classification_csv(50, 7);
        let src = TaskSource::load(&spec("statlog", f.path())).unwrap();
        assert_eq!(src.num_actions(), 7);
        assert_eq!(src.context_dim(), 2 + 3);
        assert_eq!(src.reward_kind(), RewardKind::Bernoulli);
        let mut task = src.instantiate(3, None);
        assert_eq!(task.horizon(), 50);
        while let Some(step) = task.next_step() {
            assert_eq!(step.rewards.iter().sum::<f64>(), 1.0);
            assert!(step.rewards.iter().all(|r| *r == 0.0 || *r == 1.0));
            assert!(step.context.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn one_hot_uses_sorted_categories() {
        let f = classification_csv(6, 2);
        let d = Dataset::from_csv(f.path(), DatasetKind::Classification, &spec("statlog", f.path())).unwrap();
        // columns: a, b, blue, green, red
        assert_eq!(&d.features()[0][2..], &[0.0, 0.0, 1.0]);
        assert_eq!(&d.features()[1][2..], &[0.0, 1.0, 0.0]);
        assert_eq!(&d.features()[2][2..], &[1.0, 0.0, 0.0]);
        assert_eq!(d.classes(), &["1".to_string(), "2".to_string()]);
    }

    #[test]
    fn horizon_is_capped_and_rows_do_not_repeat() {
        let f = classification_csv(6000, 3);
        let src = TaskSource::load(&spec("classification", f.path())).unwrap();
        assert_eq!(src.default_horizon(), 5000);
        let data = match &src {
            TaskSource::Dataset(d) => d.clone(),
            _ => unreachable!(),
        };
        let task = ClassificationBandit::new(
            data.clone(),
            5000,
            crate::rng::stream(1, crate::rng::Stream::Environment),
        );
        let seen: HashSet<usize> = task.order().iter().copied().collect();
        assert_eq!(seen.len(), 5000);
        let again = ClassificationBandit::new(
            data.clone(),
            5000,
            crate::rng::stream(1, crate::rng::Stream::Environment),
        );
        assert_eq!(task.order(), again.order());
        let other = ClassificationBandit::new(data, 5000, crate::rng::stream(2, crate::rng::Stream::Environment));
        assert_ne!(task.order(), other.order());
        assert_eq!(src.instantiate(0, Some(10)).horizon(), 10);
    }

    #[test]
    fn malformed_inputs() {
        let f = write_csv("a,class\n1,x\noops,y\n");
        let e = TaskSource::load(&TaskSpec::named("statlog").with_path(f.path())).unwrap_err();
        assert!(matches!(e, GlcbError::Data { .. }), "{e}");
        let f = write_csv("a,class\n");
        assert!(TaskSource::load(&TaskSpec::named("statlog").with_path(f.path())).is_err());
        let f = write_csv("a,class\n1,x\n2\n");
        assert!(TaskSource::load(&TaskSpec::named("statlog").with_path(f.path())).is_err());
        let mut s = TaskSpec::named("statlog").with_path(f.path());
        s.label_column = Some("missing".into());
        assert!(TaskSource::load(&s).is_err());
    }

    #[test]
    fn regression_rewards_are_rescaled() {
        let f = write_csv("x1,x2,r0,r1\n0,1,-2,4\n1,3,0,10\n2,2,6,1\n");
        let mut s = TaskSpec::named("financial").with_path(f.path());
        s.reward_columns = vec!["r0".into(), "r1".into()];
        let src = TaskSource::load(&s).unwrap();
        assert_eq!(src.num_actions(), 2);
        assert_eq!(src.context_dim(), 2);
        assert_eq!(src.reward_kind(), RewardKind::Continuous { r_min: 0.0, r_max: 1.0 });
        let mut task = src.instantiate(0, None);
        let mut all = Vec::new();
        while let Some(step) = task.next_step() {
            all.extend(step.rewards);
        }
        all.sort_by(f64::total_cmp);
        assert_eq!(all.first(), Some(&0.0));
        assert_eq!(all.last(), Some(&1.0));
        assert!(all.contains(&(6.0 / 12.0)));
        s.reward_columns.clear();
        assert!(TaskSource::load(&s).is_err());
    }
}
