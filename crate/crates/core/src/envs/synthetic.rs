use rand::Rng;

use super::{BanditTask, RewardKind, Step};
use crate::rng::StreamRng;

/// Bernoulli task over a fixed list of contexts drawn uniformly each round.
pub struct FiniteContextBandit {
    contexts: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
    horizon: usize,
    served: usize,
    rng: StreamRng,
}

impl FiniteContextBandit {
    pub fn new(contexts: Vec<Vec<f64>>, probs: Vec<Vec<f64>>, horizon: usize, rng: StreamRng) -> Self {
        assert_eq!(contexts.len(), probs.len());
        assert!(!contexts.is_empty());
        Self {
            contexts,
            probs,
            horizon,
            served: 0,
            rng,
        }
    }

    /// Two contexts, two arms, success rates 0.8 / 0.4 swapped across contexts.
    pub fn two_context(horizon: usize, rng: StreamRng) -> Self {
        Self::new(
            vec![vec![0.25, 0.25], vec![0.75, 0.75]],
            vec![vec![0.8, 0.4], vec![0.4, 0.8]],
            horizon,
            rng,
        )
    }
}

impl BanditTask for FiniteContextBandit {
    fn num_actions(&self) -> usize {
        self.probs[0].len()
    }

    fn context_dim(&self) -> usize {
        self.contexts[0].len()
    }

    fn reward_kind(&self) -> RewardKind {
        RewardKind::Bernoulli
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn next_step(&mut self) -> Option<Step> {
        if self.served >= self.horizon {
            return None;
        }
        self.served += 1;
        let i = self.rng.random_range(0..self.contexts.len());
        let means = self.probs[i].clone();
        let rewards = means
            .iter()
            .map(|&p| if self.rng.random_bool(p) { 1.0 } else { 0.0 })
            .collect();
        Some(Step {
            context: self.contexts[i].clone(),
            rewards,
            means,
        })
    }
}
