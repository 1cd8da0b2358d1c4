//! Reference policies: uniform random play and linear Thompson sampling.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GlcbError, Result};
use crate::policy::Policy;
use crate::rng::StreamRng;

/// Plays every action with equal probability.
pub struct Uniform {
    num_actions: usize,
    rng: StreamRng,
}

impl Uniform {
    pub fn new(num_actions: usize, rng: StreamRng) -> Result<Self> {
        if num_actions == 0 {
            return Err(GlcbError::Config("need at least one action".into()));
        }
        Ok(Self { num_actions, rng })
    }
}

impl Policy for Uniform {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn select(&mut self, _x: &[f64]) -> Result<usize> {
        Ok(self.rng.random_range(0..self.num_actions))
    }

    fn observe(&mut self, _x: &[f64], action: usize, _reward: f64) -> Result<()> {
        if action >= self.num_actions {
            return Err(GlcbError::ActionOutOfRange {
                action,
                num_actions: self.num_actions,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearTsConfig {
    /// Ridge prior scale; the precision starts at `lambda · I`.
    pub lambda: f64,
    /// Fixed observation-noise variance. Zero turns sampling off.
    pub noise_variance: f64,
}

impl Default for LinearTsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            noise_variance: 0.25,
        }
    }
}

impl LinearTsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(GlcbError::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(GlcbError::Config(format!(
                "noise_variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// Bayesian ridge posterior of one action over `[1, x]`.
#[derive(Debug, Clone)]
pub struct LinearPosterior {
    precision: DMatrix<f64>,
    moment: DVector<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl LinearPosterior {
    fn new(dim: usize, lambda: f64) -> Self {
        let precision = DMatrix::identity(dim, dim) * lambda;
        let factor = Cholesky::new(precision.clone()).expect("lambda > 0");
        Self {
            precision,
            moment: DVector::zeros(dim),
            factor,
        }
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    /// Posterior mean `A⁻¹ b`.
    pub fn mean(&self) -> DVector<f64> {
        self.factor.solve(&self.moment)
    }

    fn update(&mut self, z: &DVector<f64>, r: f64, action: usize) -> Result<()> {
        self.precision.ger(1.0, z, z, 1.0);
        self.moment.axpy(r, z, 1.0);
        self.factor = Cholesky::new(self.precision.clone()).ok_or(GlcbError::SingularPosterior(action))?;
        Ok(())
    }

    /// Draw from `N(A⁻¹b, σ² A⁻¹)`: with `A = L Lᵀ`, `L⁻ᵀ ξ` has covariance `A⁻¹`.
    fn sample<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> DVector<f64> {
        let mut w = self.mean();
        if sigma > 0.0 {
            let xi = DVector::from_fn(w.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let l = self.factor.l();
            let noise = l
                .transpose()
                .solve_upper_triangular(&xi)
                .expect("Cholesky factor has a positive diagonal");
            w.axpy(sigma, &noise, 1.0);
        }
        w
    }
}

/// Thompson sampling with an independent Bayesian linear model per action.
pub struct LinearTs {
    config: LinearTsConfig,
    context_dim: usize,
    posteriors: Vec<LinearPosterior>,
    rng: StreamRng,
}

impl LinearTs {
    pub fn new(config: LinearTsConfig, context_dim: usize, num_actions: usize, rng: StreamRng) -> Result<Self> {
        config.validate()?;
        if num_actions == 0 || context_dim == 0 {
            return Err(GlcbError::Config(
                "need at least one action and one context feature".into(),
            ));
        }
        Ok(Self {
            config,
            context_dim,
            posteriors: vec![LinearPosterior::new(context_dim + 1, config.lambda); num_actions],
            rng,
        })
    }

    pub fn posterior(&self, action: usize) -> Option<&LinearPosterior> {
        self.posteriors.get(action)
    }

    fn features(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.context_dim, x.len())?;
        Ok(DVector::from_iterator(
            x.len() + 1,
            std::iter::once(1.0).chain(x.iter().copied()),
        ))
    }
}

impl Policy for LinearTs {
    fn num_actions(&self) -> usize {
        self.posteriors.len()
    }

    fn select(&mut self, x: &[f64]) -> Result<usize> {
        let z = self.features(x)?;
        let sigma = self.config.noise_variance.sqrt();
        let mut best = (0, f64::NEG_INFINITY);
        for (a, post) in self.posteriors.iter().enumerate() {
            let v = post.sample(sigma, &mut self.rng).dot(&z);
            if v > best.1 {
                best = (a, v);
            }
        }
        Ok(best.0)
    }

    fn observe(&mut self, x: &[f64], action: usize, reward: f64) -> Result<()> {
        let z = self.features(x)?;
        let num_actions = self.posteriors.len();
        let post = self
            .posteriors
            .get_mut(action)
            .ok_or(GlcbError::ActionOutOfRange { action, num_actions })?;
        post.update(&z, reward, action)
    }
}
