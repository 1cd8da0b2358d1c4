use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BanditTask, RewardKind, Step};
use crate::error::{GlcbError, Result};
use crate::rng::StreamRng;

/// Wheel bandit parameters. Means default to the common benchmark values
/// (1.2, 1.0, 50, σ = 0.01) scaled by 1/5 so rewards fit `[0, 10]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WheelConfig {
    pub delta: f64,
    pub mu_low: f64,
    pub mu_mid: f64,
    pub mu_high: f64,
    pub noise_sigma: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for WheelConfig {
    fn default() -> Self {
        Self {
            delta: 0.95,
            mu_low: 0.24,
            mu_mid: 0.2,
            mu_high: 10.0,
            noise_sigma: 0.002,
            r_min: 0.0,
            r_max: 10.0,
        }
    }
}

impl WheelConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.delta < 1.0
            && self.mu_high > self.mu_low
            && self.mu_low > self.mu_mid
            && self.noise_sigma >= 0.0
            && self.r_min < self.r_max;
        if ok {
            Ok(())
        } else {
            Err(GlcbError::Config(format!("invalid wheel config {self:?}")))
        }
    }
}

/// Mean reward of each of the five arms at a point of the unit disk.
pub fn wheel_means(cfg: &WheelConfig, x: [f64; 2]) -> Vec<f64> {
    let mut means = vec![cfg.mu_low, cfg.mu_mid, cfg.mu_mid, cfg.mu_mid, cfg.mu_mid];
    if x[0].hypot(x[1]) > cfg.delta {
        let arm = match (x[0] > 0.0, x[1] > 0.0) {
            (true, true) => 1,
            (true, false) => 2,
            (false, true) => 3,
            (false, false) => 4,
        };
        means[arm] = cfg.mu_high;
    }
    means
}

/// Draws a context uniformly from the unit disk and returns it with the mean vector.
pub fn wheel_step<R: Rng + ?Sized>(cfg: &WheelConfig, rng: &mut R) -> ([f64; 2], Vec<f64>) {
    let x = loop {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            break p;
        }
    };
    (x, wheel_means(cfg, x))
}

/// Wheel task. Contexts are served as `(x + 1) / 2` so they lie in `[0, 1]^2`.
pub struct WheelBandit {
    cfg: WheelConfig,
    horizon: usize,
    served: usize,
    rng: StreamRng,
}

impl WheelBandit {
    pub fn new(cfg: WheelConfig, horizon: usize, rng: StreamRng) -> Self {
        Self {
            cfg,
            horizon,
            served: 0,
            rng,
        }
    }
}

impl BanditTask for WheelBandit {
    fn num_actions(&self) -> usize {
        5
    }

    fn context_dim(&self) -> usize {
        2
    }

    fn reward_kind(&self) -> RewardKind {
        RewardKind::Continuous {
            r_min: self.cfg.r_min,
            r_max: self.cfg.r_max,
        }
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn next_step(&mut self) -> Option<Step> {
        if self.served >= self.horizon {
            return None;
        }
        self.served += 1;
        let (x, means) = wheel_step(&self.cfg, &mut self.rng);
        let noise = Normal::new(0.0, self.cfg.noise_sigma).expect("validated sigma");
        let rewards = means
            .iter()
            .map(|m| (m + noise.sample(&mut self.rng)).clamp(self.cfg.r_min, self.cfg.r_max))
            .collect();
        Some(Step {
            context: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            rewards,
            means,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn argmax(v: &[f64]) -> usize {
        (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
    }

    #[test]
    fn inner_disk_prefers_arm_zero() {
        let cfg = WheelConfig::default();
        assert_eq!(argmax(&wheel_means(&cfg, [0.3, -0.5])), 0);
        assert_eq!(argmax(&wheel_means(&cfg, [0.96, 0.1])), 1);
    }

    #[test]
    fn optimal_arm_grid() {
        let cfg = WheelConfig::default();
        let n = 201;
        for i in 0..n {
            for j in 0..n {
                let x = [
                    -1.0 + 2.0 * i as f64 / (n - 1) as f64,
                    -1.0 + 2.0 * j as f64 / (n - 1) as f64,
                ];
                if x[0].hypot(x[1]) > 1.0 {
                    continue;
                }
                let want = if x[0].hypot(x[1]) <= cfg.delta {
                    0
                } else {
                    match (x[0] > 0.0, x[1] > 0.0) {
                        (true, true) => 1,
                        (true, false) => 2,
                        (false, true) => 3,
                        (false, false) => 4,
                    }
                };
                assert_eq!(argmax(&wheel_means(&cfg, x)), want, "{x:?}");
            }
        }
    }

    #[test]
    fn annulus_fraction() {
        let cfg = WheelConfig::default();
        let mut rng = stream(1, Stream::Environment);
        let n = 100_000;
        let outside = (0..n)
            .filter(|_| {
                let (x, _) = wheel_step(&cfg, &mut rng);
                x[0].hypot(x[1]) > cfg.delta
            })
            .count();
        let frac = outside as f64 / n as f64;
        assert!((frac - (1.0 - 0.95f64.powi(2))).abs() < 0.003, "{frac}");
    }

    #[test]
    fn served_contexts_and_rewards_in_range() {
        let mut task = WheelBandit::new(WheelConfig::default(), 500, stream(2, Stream::Environment));
        let mut n = 0;
        while let Some(step) = task.next_step() {
            assert!(step.context.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(step.rewards.iter().all(|r| (0.0..=10.0).contains(r)));
            n += 1;
        }
        assert_eq!(n, 500);
    }

    #[test]
    fn config_validation() {
        assert!(WheelConfig::default().validate().is_ok());
        assert!(WheelConfig {
            delta: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WheelConfig {
            mu_mid: 0.3,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
