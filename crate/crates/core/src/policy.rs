//! A common interface over the GLCB agent and the reference baselines.

use crate::agent::GlcbAgent;
use crate::error::Result;

/// A contextual bandit policy driven by the harness loop.
pub trait Policy: Send {
    fn num_actions(&self) -> usize;
    /// Chooses an action for context `x`.
    fn select(&mut self, x: &[f64]) -> Result<usize>;
    /// Feeds back the reward of the chosen action.
    fn observe(&mut self, x: &[f64], action: usize, reward: f64) -> Result<()>;
}

impl Policy for GlcbAgent {
    fn num_actions(&self) -> usize {
        GlcbAgent::num_actions(self)
    }

    fn select(&mut self, x: &[f64]) -> Result<usize> {
        self.select_action(x)
    }

    fn observe(&mut self, x: &[f64], action: usize, reward: f64) -> Result<()> {
        GlcbAgent::observe(self, x, action, reward)
    }
}
