//! Gated linear contextual bandits.
//!
//! Each action's expected reward is estimated by a gated linear network (or,
//! for bounded continuous rewards, a binary tree of them) whose neurons are
//! selected by random halfspace gates on the context. Exploration uses a
//! UCB bonus driven by soft-min pseudocounts of the gate signatures.
//!
//! ```
//! use glcb::agent::{GlcbAgent, GlcbConfig};
//! use glcb::gln::GlnConfig;
//! use glcb::rng::{stream, Stream};
//!
//! let mut config = GlcbConfig::bernoulli(2);
//! config.gln = GlnConfig::new(2).with_layer_widths(vec![8, 1]);
//! let mut agent = GlcbAgent::new(config, 3, &mut stream(0, Stream::GatingInit))?;
//! let x = [0.2, 0.7];
//! let a = agent.select_action(&x)?;
//! agent.observe(&x, a, 1.0)?;
//! assert_eq!(agent.step(), 1);
//! # Ok::<(), glcb::GlcbError>(())
//! ```
//!
//! [`harness`] runs policy × task × seed grids and writes per-step CSVs,
//! summaries and rank tables; the `glcb` binary wraps it.

pub mod agent;
pub mod baselines;
pub mod ctree;
pub mod envs;
pub mod error;
pub mod gating;
pub mod gln;
pub mod harness;
pub mod policy;
pub mod pseudocount;
pub mod rng;
pub mod snapshot;

pub use error::{GlcbError, Result};
