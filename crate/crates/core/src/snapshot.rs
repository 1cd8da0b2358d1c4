//! Versioned JSON snapshots of gates, GLN parameters, reward trees and agents.
//!
//! Every file is an envelope `{ "version", "kind", "payload" }`; loading
//! checks both the version and the kind before decoding the payload.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::agent::{Estimators, GlcbAgent, GlcbConfig};
use crate::ctree::RewardTree;
use crate::error::{check_dim, GlcbError, Result};
use crate::gating::GatingSet;
use crate::gln::Gln;
use crate::pseudocount::CountTable;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Payloads that can be stored in a snapshot envelope.
pub trait Snapshot: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Snapshot for GatingSet {
    const KIND: &'static str = "gating_set";
}

impl Snapshot for Gln {
    const KIND: &'static str = "gln";
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    version: u32,
    kind: &'a str,
    payload: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    version: u32,
    kind: String,
    payload: serde_json::Value,
}

pub fn write_snapshot<T: Snapshot, W: Write>(value: &T, writer: W) -> Result<()> {
    let env = EnvelopeOut {
        version: SNAPSHOT_VERSION,
        kind: T::KIND,
        payload: value,
    };
    serde_json::to_writer(writer, &env)?;
    Ok(())
}

pub fn read_snapshot<T: Snapshot, R: Read>(reader: R) -> Result<T> {
    let env: EnvelopeIn = serde_json::from_reader(reader)?;
    if env.version != SNAPSHOT_VERSION {
        return Err(GlcbError::SnapshotVersion {
            found: env.version,
            expected: SNAPSHOT_VERSION,
        });
    }
    if env.kind != T::KIND {
        return Err(GlcbError::Config(format!(
            "snapshot holds a {:?}, expected a {:?}",
            env.kind,
            T::KIND
        )));
    }
    Ok(serde_json::from_value(env.payload)?)
}

pub fn to_json<T: Snapshot>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_snapshot(value, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn from_json<T: Snapshot>(s: &str) -> Result<T> {
    read_snapshot(s.as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode {
    pub gating: GatingSet,
    pub params: Gln,
}

/// A reward tree with its nodes in heap (address) order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub depth: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: Vec<TreeNode>,
}

impl Snapshot for TreeSnapshot {
    const KIND: &'static str = "reward_tree";
}

impl From<&RewardTree> for TreeSnapshot {
    fn from(tree: &RewardTree) -> Self {
        let (r_min, r_max) = tree.range();
        Self {
            depth: tree.depth(),
            r_min,
            r_max,
            nodes: tree
                .nodes()
                .iter()
                .zip(tree.gating())
                .map(|(params, g)| TreeNode {
                    gating: (**g).clone(),
                    params: params.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<TreeSnapshot> for RewardTree {
    type Error = GlcbError;

    fn try_from(s: TreeSnapshot) -> Result<Self> {
        let (gating, nodes) = s.nodes.into_iter().map(|n| (Arc::new(n.gating), n.params)).unzip();
        RewardTree::from_parts(s.depth, s.r_min, s.r_max, nodes, gating)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", content = "params", rename_all = "snake_case")]
enum EstimatorState {
    Bernoulli(Vec<Gln>),
    /// Per action, node parameters in heap order; gates live on the agent.
    Continuous(Vec<Vec<Gln>>),
}

/// Everything needed to resume an agent: config, gates, parameters, counts
/// and the step counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSnapshot {
    config: GlcbConfig,
    num_actions: usize,
    gating: Vec<GatingSet>,
    estimators: EstimatorState,
    counts: CountTable,
    t: u64,
}

impl Snapshot for AgentSnapshot {
    const KIND: &'static str = "glcb_agent";
}

impl From<&GlcbAgent> for AgentSnapshot {
    fn from(agent: &GlcbAgent) -> Self {
        let estimators = match agent.estimators() {
            Estimators::Bernoulli(v) => EstimatorState::Bernoulli(v.clone()),
            Estimators::Continuous(v) => EstimatorState::Continuous(v.iter().map(|t| t.nodes().to_vec()).collect()),
        };
        Self {
            config: agent.config().clone(),
            num_actions: agent.num_actions(),
            gating: agent.gating().iter().map(|g| (**g).clone()).collect(),
            estimators,
            counts: agent.counts().clone(),
            t: agent.step(),
        }
    }
}

impl TryFrom<AgentSnapshot> for GlcbAgent {
    type Error = GlcbError;

    fn try_from(s: AgentSnapshot) -> Result<Self> {
        s.config.validate()?;
        check_dim(s.config.num_gating_sets(), s.gating.len())?;
        check_dim(s.num_actions, s.counts.num_actions())?;
        let gating: Vec<Arc<GatingSet>> = s.gating.into_iter().map(Arc::new).collect();
        let estimators = match (s.estimators, s.config.mode) {
            (EstimatorState::Bernoulli(v), crate::agent::RewardMode::Bernoulli) => {
                check_dim(s.num_actions, v.len())?;
                Estimators::Bernoulli(v)
            }
            (EstimatorState::Continuous(v), crate::agent::RewardMode::Continuous { depth, r_min, r_max }) => {
                check_dim(s.num_actions, v.len())?;
                Estimators::Continuous(
                    v.into_iter()
                        .map(|nodes| RewardTree::from_parts(depth, r_min, r_max, nodes, gating.clone()))
                        .collect::<Result<_>>()?,
                )
            }
            _ => {
                return Err(GlcbError::Config(
                    "snapshot estimators do not match the configured mode".into(),
                ))
            }
        };
        Ok(GlcbAgent::from_parts(
            s.config,
            s.num_actions,
            gating,
            estimators,
            s.counts,
            s.t,
        ))
    }
}

pub fn save_agent<W: Write>(agent: &GlcbAgent, writer: W) -> Result<()> {
    write_snapshot(&AgentSnapshot::from(agent), writer)
}

pub fn load_agent<R: Read>(reader: R) -> Result<GlcbAgent> {
    read_snapshot::<AgentSnapshot, _>(reader)?.try_into()
}
