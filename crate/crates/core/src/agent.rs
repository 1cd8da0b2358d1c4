//! The GLCB policy.
//!
//! One estimator per action (a GLN for Bernoulli rewards, a [`RewardTree`]
//! for bounded continuous rewards), all reading the same gating sets. An
//! action's score is its estimate plus `C · sqrt(ln t / N̂)`, where `N̂` is the
//! soft-min pseudocount of the current total signature.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ctree::RewardTree;
use crate::error::{check_dim, GlcbError, Result};
use crate::gating::{sample_gating, BiasCentering, GatingParams, GatingSet, Signature};
use crate::gln::{Gln, GlnConfig};
use crate::pseudocount::{argmax_lowest, exploration_bonus, CountTable, Score};

/// Slack allowed on continuous rewards before they are rejected.
pub const REWARD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardMode {
    Bernoulli,
    Continuous { depth: usize, r_min: f64, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlcbConfig {
    pub exploration_c: f64,
    pub lr_init: f64,
    pub lr_decay: f64,
    pub switching_init: f64,
    pub switching_decay: f64,
    pub planes_per_unit: usize,
    pub bias_scale: f64,
    #[serde(default)]
    pub centering: BiasCentering,
    pub gln: GlnConfig,
    pub mode: RewardMode,
}

impl GlcbConfig {
    /// Defaults tuned for Bernoulli tasks.
    pub fn bernoulli(input_dim: usize) -> Self {
        Self {
            exploration_c: 0.03,
            lr_init: 0.1,
            lr_decay: 0.1,
            switching_init: 10.0,
            switching_decay: 1.0,
            planes_per_unit: 8,
            bias_scale: 0.05,
            centering: BiasCentering::CubeCenter,
            gln: GlnConfig::new(input_dim),
            mode: RewardMode::Bernoulli,
        }
    }

    /// Defaults tuned for continuous tasks, with a depth-3 tree over `[r_min, r_max]`.
    pub fn continuous(input_dim: usize, r_min: f64, r_max: f64) -> Self {
        Self {
            exploration_c: 0.1,
            lr_init: 1.0,
            lr_decay: 0.01,
            switching_init: 1.0,
            switching_decay: 0.1,
            planes_per_unit: 2,
            bias_scale: 0.001,
            centering: BiasCentering::CubeCenter,
            gln: GlnConfig::new(input_dim),
            mode: RewardMode::Continuous { depth: 3, r_min, r_max },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gln.validate()?;
        let bad = |m: String| Err(GlcbError::Config(m));
        if !(self.exploration_c.is_finite() && self.exploration_c >= 0.0) {
            return bad(format!("exploration constant must be >= 0, got {}", self.exploration_c));
        }
        if !(self.lr_init > 0.0 && self.lr_decay >= 0.0) {
            return bad("learning rate schedule needs initial > 0 and decay >= 0".into());
        }
        if !(self.switching_init > 0.0 && self.switching_decay >= 0.0) {
            return bad("switching schedule needs initial > 0 and decay >= 0".into());
        }
        if self.planes_per_unit == 0 || self.planes_per_unit > crate::gating::MAX_PLANES_PER_UNIT {
            return bad(format!(
                "hyperplanes per unit must be in 1..={}, got {}",
                crate::gating::MAX_PLANES_PER_UNIT,
                self.planes_per_unit
            ));
        }
        if !(self.bias_scale.is_finite() && self.bias_scale >= 0.0) {
            return bad(format!("bias scale must be >= 0, got {}", self.bias_scale));
        }
        if let RewardMode::Continuous { depth, r_min, r_max } = self.mode {
            crate::ctree::midpoints(depth, r_min, r_max)?;
        }
        Ok(())
    }

    fn gating_params(&self) -> GatingParams {
        GatingParams {
            dim: self.gln.input_dim,
            units: self.gln.num_units(),
            planes_per_unit: self.planes_per_unit,
            bias_scale: self.bias_scale,
            centering: self.centering,
        }
    }

    /// Gating sets per estimator: 1 for a GLN, `2^D - 1` for a tree.
    pub fn num_gating_sets(&self) -> usize {
        match self.mode {
            RewardMode::Bernoulli => 1,
            RewardMode::Continuous { depth, .. } => (1 << depth) - 1,
        }
    }
}

/// `initial / (1 + decay · n)`.
pub fn schedule(initial: f64, decay: f64, n: u64) -> f64 {
    initial / (1.0 + decay * n as f64)
}

#[derive(Debug, Clone)]
pub(crate) enum Estimators {
    Bernoulli(Vec<Gln>),
    Continuous(Vec<RewardTree>),
}

#[derive(Debug, Clone)]
pub struct GlcbAgent {
    config: GlcbConfig,
    num_actions: usize,
    gating: Vec<Arc<GatingSet>>,
    estimators: Estimators,
    counts: CountTable,
    t: u64,
}

impl GlcbAgent {
    /// Samples the gating sets from `rng` and builds fresh estimators.
    pub fn new<R: Rng + ?Sized>(config: GlcbConfig, num_actions: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let params = config.gating_params();
        let gating = (0..config.num_gating_sets())
            .map(|_| sample_gating(&params, rng).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Self::with_gating(config, num_actions, gating)
    }

    pub fn with_gating(config: GlcbConfig, num_actions: usize, gating: Vec<Arc<GatingSet>>) -> Result<Self> {
        config.validate()?;
        if num_actions == 0 {
            return Err(GlcbError::Config("need at least one action".into()));
        }
        check_dim(config.num_gating_sets(), gating.len())?;
        for g in &gating {
            check_dim(config.gln.num_units(), g.num_units())?;
            check_dim(config.gln.input_dim, g.dim())?;
        }
        let num_signatures = gating.iter().map(|g| g.num_signatures()).max().unwrap_or(1);
        let estimators = match config.mode {
            RewardMode::Bernoulli => Estimators::Bernoulli(
                (0..num_actions)
                    .map(|_| Gln::new(config.gln.clone(), num_signatures))
                    .collect::<Result<_>>()?,
            ),
            RewardMode::Continuous { depth, r_min, r_max } => Estimators::Continuous(
                (0..num_actions)
                    .map(|_| RewardTree::new(depth, r_min, r_max, &config.gln, gating.clone()))
                    .collect::<Result<_>>()?,
            ),
        };
        let units = config.gln.num_units() * gating.len();
        Ok(Self {
            counts: CountTable::new(units, num_signatures, num_actions),
            config,
            num_actions,
            gating,
            estimators,
            t: 0,
        })
    }

    pub(crate) fn from_parts(
        config: GlcbConfig,
        num_actions: usize,
        gating: Vec<Arc<GatingSet>>,
        estimators: Estimators,
        counts: CountTable,
        t: u64,
    ) -> Self {
        Self {
            config,
            num_actions,
            gating,
            estimators,
            counts,
            t,
        }
    }

    pub fn config(&self) -> &GlcbConfig {
        &self.config
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gating(&self) -> &[Arc<GatingSet>] {
        &self.gating
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    pub(crate) fn estimators(&self) -> &Estimators {
        &self.estimators
    }

    /// Number of completed steps; the next decision happens at step `t + 1`.
    pub fn step(&self) -> u64 {
        self.t
    }

    pub fn gln(&self, action: usize) -> Option<&Gln> {
        match &self.estimators {
            Estimators::Bernoulli(v) => v.get(action),
            Estimators::Continuous(_) => None,
        }
    }

    pub fn tree(&self, action: usize) -> Option<&RewardTree> {
        match &self.estimators {
            Estimators::Continuous(v) => v.get(action),
            Estimators::Bernoulli(_) => None,
        }
    }

    /// Per-gating-set signatures of `x`.
    pub fn signatures(&self, x: &[f64]) -> Result<Vec<Signature>> {
        self.gating.iter().map(|g| g.total_signature(x)).collect()
    }

    fn value(&self, sigs: &[Signature], x: &[f64], action: usize) -> Result<f64> {
        match &self.estimators {
            Estimators::Bernoulli(v) => v[action].predict(&sigs[0], x),
            Estimators::Continuous(v) => v[action].expected_reward_with(sigs, x),
        }
    }

    /// Estimated expected reward of `action` in context `x`.
    pub fn estimate(&self, x: &[f64], action: usize) -> Result<f64> {
        self.check_action(action)?;
        self.value(&self.signatures(x)?, x, action)
    }

    /// Estimate and exploration bonus of every action at the next step.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<Score>> {
        let sigs = self.signatures(x)?;
        let total = Signature::concat(&sigs);
        let now = self.t + 1;
        // pseudocounts use the previous step's temperature, bonuses ln(now)
        let temperature_step = self.t.max(1);
        (0..self.num_actions)
            .map(|a| {
                let nhat = self.counts.pseudocount(&total, a, temperature_step)?;
                Ok(Score {
                    value: self.value(&sigs, x, a)?,
                    bonus: exploration_bonus(now, nhat, self.config.exploration_c),
                })
            })
            .collect()
    }

    /// Highest-scoring action, lowest index on ties. Does not change state.
    pub fn select_action(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.scores(x)?).expect("at least one action"))
    }

    pub fn learning_rate(&self, action: usize) -> f64 {
        schedule(self.config.lr_init, self.config.lr_decay, self.counts.pulls(action))
    }

    /// Switching-rate schedule for `action`. Carried for configuration
    /// round-trips; no estimator consumes it.
    pub fn switching_rate(&self, action: usize) -> f64 {
        schedule(
            self.config.switching_init,
            self.config.switching_decay,
            self.counts.pulls(action),
        )
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action < self.num_actions {
            Ok(())
        } else {
            Err(GlcbError::ActionOutOfRange {
                action,
                num_actions: self.num_actions,
            })
        }
    }

    /// Trains the estimator of `action` on reward `r` and records the visit.
    pub fn observe(&mut self, x: &[f64], action: usize, r: f64) -> Result<()> {
        self.check_action(action)?;
        let sigs = self.signatures(x)?;
        let lr = self.learning_rate(action);
        match (&mut self.estimators, self.config.mode) {
            (Estimators::Bernoulli(v), RewardMode::Bernoulli) => {
                let target = if r == 1.0 {
                    true
                } else if r == 0.0 {
                    false
                } else {
                    return Err(GlcbError::RewardOutOfRange {
                        reward: r,
                        min: 0.0,
                        max: 1.0,
                    });
                };
                v[action].learn(&sigs[0], x, target, lr)?;
            }
            (Estimators::Continuous(v), RewardMode::Continuous { r_min, r_max, .. }) => {
                if !(r >= r_min - REWARD_TOLERANCE && r <= r_max + REWARD_TOLERANCE) {
                    return Err(GlcbError::RewardOutOfRange {
                        reward: r,
                        min: r_min,
                        max: r_max,
                    });
                }
                v[action].update_with(&sigs, x, r.clamp(r_min, r_max), lr)?;
            }
            _ => unreachable!("estimators always match the configured mode"),
        }
        self.counts.increment(&Signature::concat(&sigs), action)?;
        self.t += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn small_bernoulli(actions: usize, seed: u64) -> GlcbAgent {
        let mut cfg = GlcbConfig::bernoulli(2);
        cfg.gln = cfg.gln.with_layer_widths(vec![8, 4, 1]);
        cfg.planes_per_unit = 4;
        GlcbAgent::new(cfg, actions, &mut stream(seed, Stream::GatingInit)).unwrap()
    }

    #[test]
    fn schedule_cases() {
        assert_eq!(schedule(0.1, 0.1, 0), 0.1);
        assert!((schedule(0.1, 0.1, 10) - 0.05).abs() < 1e-15);
        assert!((schedule(1.0, 0.01, 100) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn defaults_per_mode() {
        let b = GlcbConfig::bernoulli(4);
        assert_eq!((b.exploration_c, b.planes_per_unit, b.bias_scale), (0.03, 8, 0.05));
        assert_eq!(
            (b.lr_init, b.lr_decay, b.switching_init, b.switching_decay),
            (0.1, 0.1, 10.0, 1.0)
        );
        assert_eq!(b.gln.layer_widths, vec![100, 10, 1]);
        let c = GlcbConfig::continuous(4, 0.0, 10.0);
        assert_eq!((c.exploration_c, c.planes_per_unit, c.bias_scale), (0.1, 2, 0.001));
        assert_eq!(
            (c.lr_init, c.lr_decay, c.switching_init, c.switching_decay),
            (1.0, 0.01, 1.0, 0.1)
        );
        assert_eq!(
            c.mode,
            RewardMode::Continuous {
                depth: 3,
                r_min: 0.0,
                r_max: 10.0
            }
        );
    }

    #[test]
    fn first_step_picks_action_zero() {
        let agent = small_bernoulli(4, 1);
        let scores = agent.scores(&[0.2, 0.9]).unwrap();
        assert!(scores.iter().all(|s| s.bonus.is_infinite()));
        assert_eq!(agent.select_action(&[0.2, 0.9]).unwrap(), 0);
    }

    #[test]
    fn unpulled_action_is_preferred() {
        let mut agent = small_bernoulli(3, 2);
        let x = [0.4, 0.4];
        agent.observe(&x, 0, 1.0).unwrap();
        agent.observe(&x, 2, 1.0).unwrap();
        assert_eq!(agent.select_action(&x).unwrap(), 1);
    }

    #[test]
    fn zero_exploration_is_greedy() {
        let mut cfg = GlcbConfig::bernoulli(2);
        cfg.gln = cfg.gln.with_layer_widths(vec![8, 4, 1]);
        cfg.exploration_c = 0.0;
        let mut agent = GlcbAgent::new(cfg, 3, &mut stream(3, Stream::GatingInit)).unwrap();
        let x = [0.7, 0.1];
        for a in 0..3 {
            agent.observe(&x, a, if a == 1 { 1.0 } else { 0.0 }).unwrap();
        }
        let scores = agent.scores(&x).unwrap();
        assert!(scores.iter().all(|s| s.bonus.as_f64() == 0.0));
        let greedy = (0..3)
            .max_by(|&a, &b| {
                agent
                    .estimate(&x, a)
                    .unwrap()
                    .total_cmp(&agent.estimate(&x, b).unwrap())
            })
            .unwrap();
        assert_eq!(agent.select_action(&x).unwrap(), greedy);
        assert_eq!(greedy, 1);
    }

    #[test]
    fn observe_touches_only_chosen_estimator() {
        let mut agent = small_bernoulli(2, 4);
        let before = agent.gln(0).unwrap().clone();
        agent.observe(&[0.3, 0.3], 1, 1.0).unwrap();
        assert_eq!(agent.gln(0).unwrap(), &before);
        assert_eq!(agent.step(), 1);
    }

    #[test]
    fn learning_rate_follows_pulls() {
        let mut agent = small_bernoulli(2, 5);
        assert_eq!(agent.learning_rate(0), 0.1);
        agent.observe(&[0.3, 0.3], 0, 0.0).unwrap();
        assert!((agent.learning_rate(0) - 0.1 / 1.1).abs() < 1e-15);
        assert_eq!(agent.learning_rate(1), 0.1);
        assert!((agent.switching_rate(0) - 10.0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pseudocount_grows_from_equal_counts() {
        let mut agent = small_bernoulli(2, 6);
        let x = [0.8, 0.2];
        let total = Signature::concat(&agent.signatures(&x).unwrap());
        for _ in 0..3 {
            agent.observe(&x, 0, 1.0).unwrap();
        }
        let before = agent.counts().pseudocount(&total, 0, agent.step()).unwrap();
        agent.observe(&x, 0, 1.0).unwrap();
        let after = agent.counts().pseudocount(&total, 0, agent.step()).unwrap();
        assert_eq!(before, 3.0);
        assert!(after > before);
    }

    #[test]
    fn rejects_bad_rewards_and_actions() {
        let mut agent = small_bernoulli(2, 7);
        assert!(agent.observe(&[0.1, 0.1], 0, 0.5).is_err());
        assert!(agent.observe(&[0.1, 0.1], 2, 1.0).is_err());
        assert!(agent.select_action(&[0.1]).is_err());
        assert_eq!(agent.step(), 0);

        let mut cfg = GlcbConfig::continuous(2, 0.0, 1.0);
        cfg.gln = cfg.gln.with_layer_widths(vec![4, 1]);
        let mut c = GlcbAgent::new(cfg, 2, &mut stream(7, Stream::GatingInit)).unwrap();
        assert!(c.observe(&[0.1, 0.1], 0, 1.0 + 1e-10).is_ok());
        assert!(c.observe(&[0.1, 0.1], 0, 1.01).is_err());
        assert!(c.observe(&[0.1, 0.1], 0, -0.5).is_err());
    }

    #[test]
    fn continuous_counts_cover_every_node() {
        let mut cfg = GlcbConfig::continuous(2, 0.0, 10.0);
        cfg.gln = cfg.gln.with_layer_widths(vec![6, 1]);
        let agent = GlcbAgent::new(cfg, 3, &mut stream(8, Stream::GatingInit)).unwrap();
        assert_eq!(agent.counts().num_units(), 7 * 7);
        assert_eq!(agent.gating().len(), 7);
    }

    #[test]
    fn selected_score_dominates_online() {
        let mut agent = small_bernoulli(3, 9);
        let mut rng = stream(9, Stream::Environment);
        for _ in 0..500 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let scores = agent.scores(&x).unwrap();
            let a = agent.select_action(&x).unwrap();
            for s in &scores {
                assert_ne!(s.compare(&scores[a]), std::cmp::Ordering::Greater);
            }
            let r = if rng.random_bool(0.3 + 0.2 * a as f64) {
                1.0
            } else {
                0.0
            };
            agent.observe(&x, a, r).unwrap();
        }
    }

    #[test]
    fn equal_seeds_replay_identically() {
        let play = |seed: u64| {
            let mut agent = small_bernoulli(3, seed);
            let mut rng = stream(seed, Stream::Environment);
            (0..300)
                .map(|_| {
                    let x = [rng.random::<f64>(), rng.random::<f64>()];
                    let a = agent.select_action(&x).unwrap();
                    agent
                        .observe(&x, a, if rng.random_bool(0.5) { 1.0 } else { 0.0 })
                        .unwrap();
                    a
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(play(10), play(10));
    }

    #[test]
    fn every_action_keeps_being_explored() {
        // pulls of an arm with gap g grow like (C/g)^2 ln t, so C must be O(1)
        // for the log2(T) floor to bind at T = 1e4
        let cfg = GlcbConfig {
            exploration_c: 1.0,
            ..GlcbConfig::bernoulli(2)
        };
        let mut agent = GlcbAgent::new(cfg, 3, &mut stream(12, Stream::GatingInit)).unwrap();
        let mut rng = stream(12, Stream::Environment);
        let x = [0.35, 0.6];
        let probs = [0.2, 0.5, 0.8];
        for _ in 0..10_000 {
            let a = agent.select_action(&x).unwrap();
            agent
                .observe(&x, a, if rng.random_bool(probs[a]) { 1.0 } else { 0.0 })
                .unwrap();
        }
        let floor = (10_000f64).log2().ceil() as u64;
        for a in 0..3 {
            assert!(
                agent.counts().pulls(a) >= floor,
                "action {a}: {}",
                agent.counts().pulls(a)
            );
        }
    }
}
