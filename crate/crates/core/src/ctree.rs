//! Tree-of-GLNs regression for bounded continuous rewards.
//!
//! A complete binary tree of depth `D` splits `[r_min, r_max]` into `2^D`
//! equal bins. Each internal node holds a GLN predicting "go right". Nodes are
//! stored in heap order: the node addressed by the bit string `b_1..b_d`
//! (read big-endian as `k`) lives at index `2^d - 1 + k`, the root at 0.

use std::sync::Arc;

use crate::error::{check_dim, GlcbError, Result};
use crate::gating::{GatingSet, Signature};
use crate::gln::{Gln, GlnConfig};

pub const MAX_DEPTH: usize = 6;

/// Root-to-leaf path; `bits` holds `b_1` in its most significant position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LeafPath {
    bits: u32,
    depth: usize,
}

impl LeafPath {
    pub fn new(bits: u32, depth: usize) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH || bits >= (1 << depth) {
            return Err(GlcbError::MalformedPath(format!("{bits:#b} at depth {depth}")));
        }
        Ok(Self { bits, depth })
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > MAX_DEPTH || !s.bytes().all(|c| c == b'0' || c == b'1') {
            return Err(GlcbError::MalformedPath(s.to_string()));
        }
        let bits = u32::from_str_radix(s, 2).map_err(|_| GlcbError::MalformedPath(s.to_string()))?;
        Self::new(bits, s.len())
    }

    /// Leaf index `dec(b)`.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `b_i` for `i` in `1..=depth`.
    pub fn bit(&self, i: usize) -> bool {
        (self.bits >> (self.depth - i)) & 1 == 1
    }

    /// Heap index of the node reached after the first `i` steps.
    pub fn prefix_node(&self, i: usize) -> usize {
        (1usize << i) - 1 + (self.bits >> (self.depth - i)) as usize
    }
}

impl std::fmt::Display for LeafPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.depth)
    }
}

/// Bin midpoints `r_min + (k + 1/2)(r_max - r_min) / 2^D`.
pub fn midpoints(depth: usize, r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    check_range(depth, r_min, r_max)?;
    let bins = 1usize << depth;
    let width = (r_max - r_min) / bins as f64;
    Ok((0..bins).map(|k| r_min + (k as f64 + 0.5) * width).collect())
}

/// Bin containing `r`, with `r_max` folded into the last bin.
pub fn target_path(r: f64, depth: usize, r_min: f64, r_max: f64) -> Result<LeafPath> {
    check_range(depth, r_min, r_max)?;
    if !(r >= r_min && r <= r_max) {
        return Err(GlcbError::RewardOutOfRange {
            reward: r,
            min: r_min,
            max: r_max,
        });
    }
    let bins = 1usize << depth;
    let k = (((r - r_min) / (r_max - r_min)) * bins as f64).floor() as usize;
    LeafPath::new(k.min(bins - 1) as u32, depth)
}

fn check_range(depth: usize, r_min: f64, r_max: f64) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(GlcbError::Config(format!("tree depth must be in 1..={MAX_DEPTH}")));
    }
    if !(r_min.is_finite() && r_max.is_finite() && r_min < r_max) {
        return Err(GlcbError::Config(format!("invalid reward range [{r_min}, {r_max}]")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RewardTree {
    depth: usize,
    r_min: f64,
    r_max: f64,
    nodes: Vec<Gln>,
    gating: Vec<Arc<GatingSet>>,
    midpoints: Vec<f64>,
}

impl RewardTree {
    /// Builds a tree with fresh GLNs; `gating[i]` gates heap node `i`.
    pub fn new(depth: usize, r_min: f64, r_max: f64, config: &GlnConfig, gating: Vec<Arc<GatingSet>>) -> Result<Self> {
        midpoints(depth, r_min, r_max)?;
        let nodes = (0..(1usize << depth) - 1)
            .map(|i| {
                let g = gating.get(i).ok_or_else(|| {
                    GlcbError::Config(format!("tree of depth {depth} needs {} gating sets", (1 << depth) - 1))
                })?;
                check_dim(config.num_units(), g.num_units())?;
                check_dim(config.input_dim, g.dim())?;
                Gln::new(config.clone(), g.num_signatures())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(depth, r_min, r_max, nodes, gating)
    }

    pub(crate) fn from_parts(
        depth: usize,
        r_min: f64,
        r_max: f64,
        nodes: Vec<Gln>,
        gating: Vec<Arc<GatingSet>>,
    ) -> Result<Self> {
        let midpoints = midpoints(depth, r_min, r_max)?;
        let n = (1usize << depth) - 1;
        check_dim(n, nodes.len())?;
        check_dim(n, gating.len())?;
        Ok(Self {
            depth,
            r_min,
            r_max,
            nodes,
            gating,
            midpoints,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn nodes(&self) -> &[Gln] {
        &self.nodes
    }

    pub fn node_mut(&mut self, index: usize) -> Option<&mut Gln> {
        self.nodes.get_mut(index)
    }

    pub fn gating(&self) -> &[Arc<GatingSet>] {
        &self.gating
    }

    /// Per-node signatures of `x`, in heap order.
    pub fn signatures(&self, x: &[f64]) -> Result<Vec<Signature>> {
        self.gating.iter().map(|g| g.total_signature(x)).collect()
    }

    fn check_sigs(&self, sigs: &[Signature]) -> Result<()> {
        check_dim(self.nodes.len(), sigs.len())
    }

    /// `P(b | x)`: product of branch probabilities along the path.
    pub fn leaf_probability(&self, x: &[f64], leaf: &LeafPath) -> Result<f64> {
        if leaf.depth() != self.depth {
            return Err(GlcbError::MalformedPath(format!(
                "{leaf} has length {} but the tree has depth {}",
                leaf.depth(),
                self.depth
            )));
        }
        let mut p = 1.0;
        for i in 0..self.depth {
            let node = leaf.prefix_node(i);
            let right = self.nodes[node].predict(&self.gating[node].total_signature(x)?, x)?;
            p *= if leaf.bit(i + 1) { right } else { 1.0 - right };
        }
        Ok(p)
    }

    pub fn expected_reward(&self, x: &[f64]) -> Result<f64> {
        self.expected_reward_with(&self.signatures(x)?, x)
    }

    /// `Σ_b P(b|x) v_b`, one depth-first pass with precomputed node signatures.
    pub fn expected_reward_with(&self, sigs: &[Signature], x: &[f64]) -> Result<f64> {
        self.check_sigs(sigs)?;
        let mut outputs = Vec::with_capacity(self.nodes.len());
        for (node, sig) in self.nodes.iter().zip(sigs) {
            outputs.push(node.predict(sig, x)?);
        }
        Ok(self.accumulate(&outputs, 0, 0, 1.0))
    }

    fn accumulate(&self, outputs: &[f64], level: usize, offset: usize, mass: f64) -> f64 {
        if level == self.depth {
            return mass * self.midpoints[offset];
        }
        let right = outputs[(1 << level) - 1 + offset];
        self.accumulate(outputs, level + 1, 2 * offset, mass * (1.0 - right))
            + self.accumulate(outputs, level + 1, 2 * offset + 1, mass * right)
    }

    pub fn target_path(&self, r: f64) -> Result<LeafPath> {
        target_path(r, self.depth, self.r_min, self.r_max)
    }

    pub fn update(&mut self, x: &[f64], r: f64, lr: f64) -> Result<()> {
        let sigs = self.signatures(x)?;
        self.update_with(&sigs, x, r, lr)
    }

    /// Trains the `D` nodes on the path to `r`'s bin, each on its branch bit.
    pub fn update_with(&mut self, sigs: &[Signature], x: &[f64], r: f64, lr: f64) -> Result<()> {
        self.check_sigs(sigs)?;
        let path = self.target_path(r)?;
        for i in 0..self.depth {
            let node = path.prefix_node(i);
            self.nodes[node].learn(&sigs[node], x, path.bit(i + 1), lr)?;
        }
        Ok(())
    }
}
