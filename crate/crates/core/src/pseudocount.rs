//! Signature-action visitation counts and the soft-min pseudocount.
//!
//! For a total signature `s` and action `a`, each unit `u` contributes the
//! exact count `N_u = N(s_u, a)`. The pseudocount is their soft-min
//!
//! ```text
//!   N̂ = Σ_u ω_u N_u / Σ_u ω_u,   ω_u = exp(-ln(t) · N_u / N_max)
//! ```
//!
//! which is the arithmetic mean at `t = 1` and tends to `min_u N_u` as `t`
//! grows. The matching UCB bonus is `C · sqrt(ln t / N̂)`, infinite when
//! `N̂ = 0`.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GlcbError, Result};
use crate::gating::Signature;

/// Dense storage is used while `units × signatures × actions` stays below this.
pub const DENSE_LIMIT: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Storage {
    Dense(Vec<u64>),
    Sparse(HashMap<u64, u64>),
}

/// Exact counts `N(s_u, a)` per unit, signature and action, plus pulls per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    num_units: usize,
    num_signatures: usize,
    num_actions: usize,
    storage: Storage,
    pulls: Vec<u64>,
    step: u64,
}

impl CountTable {
    pub fn new(num_units: usize, num_signatures: usize, num_actions: usize) -> Self {
        let cells = num_units.saturating_mul(num_signatures).saturating_mul(num_actions);
        let kind = if cells <= DENSE_LIMIT {
            StorageKind::Dense
        } else {
            StorageKind::Sparse
        };
        Self::with_storage(num_units, num_signatures, num_actions, kind)
    }

    pub fn with_storage(num_units: usize, num_signatures: usize, num_actions: usize, kind: StorageKind) -> Self {
        let storage = match kind {
            StorageKind::Dense => Storage::Dense(vec![0; num_units * num_signatures * num_actions]),
            StorageKind::Sparse => Storage::Sparse(HashMap::new()),
        };
        Self {
            num_units,
            num_signatures,
            num_actions,
            storage,
            pulls: vec![0; num_actions],
            step: 0,
        }
    }

    pub fn num_units(&self) -> usize {
        self.num_units
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn storage_kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense(_) => StorageKind::Dense,
            Storage::Sparse(_) => StorageKind::Sparse,
        }
    }

    /// Number of increments so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn pulls(&self, action: usize) -> u64 {
        self.pulls.get(action).copied().unwrap_or(0)
    }

    #[inline]
    fn key(&self, unit: usize, sig: u32, action: usize) -> usize {
        (action * self.num_units + unit) * self.num_signatures + sig as usize
    }

    pub fn count(&self, unit: usize, sig: u32, action: usize) -> u64 {
        if unit >= self.num_units || sig as usize >= self.num_signatures || action >= self.num_actions {
            return 0;
        }
        let k = self.key(unit, sig, action);
        match &self.storage {
            Storage::Dense(v) => v[k],
            Storage::Sparse(m) => m.get(&(k as u64)).copied().unwrap_or(0),
        }
    }

    fn check(&self, sig: &Signature, action: usize) -> Result<()> {
        check_dim(self.num_units, sig.len())?;
        if action >= self.num_actions {
            return Err(GlcbError::ActionOutOfRange {
                action,
                num_actions: self.num_actions,
            });
        }
        if let Some(&s) = sig.0.iter().find(|&&s| s as usize >= self.num_signatures) {
            return Err(GlcbError::Config(format!(
                "signature {s} exceeds signature space {}",
                self.num_signatures
            )));
        }
        Ok(())
    }

    /// Adds one visit of `action` at every unit's signature.
    pub fn increment(&mut self, sig: &Signature, action: usize) -> Result<()> {
        self.check(sig, action)?;
        for (u, &s) in sig.0.iter().enumerate() {
            let k = self.key(u, s, action);
            match &mut self.storage {
                Storage::Dense(v) => v[k] += 1,
                Storage::Sparse(m) => *m.entry(k as u64).or_insert(0) += 1,
            }
        }
        self.pulls[action] += 1;
        self.step += 1;
        Ok(())
    }

    /// Per-unit counts `N(s_u, a)` for a total signature.
    pub fn unit_counts(&self, sig: &Signature, action: usize) -> Result<Vec<u64>> {
        self.check(sig, action)?;
        Ok(sig
            .0
            .iter()
            .enumerate()
            .map(|(u, &s)| self.count(u, s, action))
            .collect())
    }

    /// Soft-min pseudocount `N̂` at temperature `ln t`.
    pub fn pseudocount(&self, sig: &Signature, action: usize, t: u64) -> Result<f64> {
        Ok(soft_min_count(&self.unit_counts(sig, action)?, t))
    }
}

/// Soft-min of `counts` with temperature `ln t`; zero when every count is zero.
pub fn soft_min_count(counts: &[u64], t: u64) -> f64 {
    let n_max = counts.iter().copied().max().unwrap_or(0);
    if n_max == 0 {
        return 0.0;
    }
    let n_min = counts.iter().copied().min().unwrap_or(0);
    let temp = (t.max(1) as f64).ln();
    let n_max = n_max as f64;
    // weighted mean of the excess over the minimum, so equal counts are exact
    let (num, den) = counts.iter().fold((0.0, 0.0), |(num, den), &n| {
        let w = (-temp * n as f64 / n_max).exp();
        (num + w * (n - n_min) as f64, den + w)
    });
    n_min as f64 + num / den
}

/// Exploration bonus, with an explicit infinite case for unvisited pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bonus {
    Finite(f64),
    Infinite,
}

impl Bonus {
    pub fn is_infinite(self) -> bool {
        matches!(self, Bonus::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Bonus::Finite(v) => v,
            Bonus::Infinite => f64::INFINITY,
        }
    }
}

/// `C · sqrt(ln t / N̂)`; infinite for `N̂ = 0`.
pub fn exploration_bonus(t: u64, nhat: f64, c: f64) -> Bonus {
    if nhat <= 0.0 {
        Bonus::Infinite
    } else {
        Bonus::Finite(c * ((t.max(1) as f64).ln() / nhat).sqrt())
    }
}

/// Estimator value plus bonus. Infinite scores beat every finite one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub bonus: Bonus,
}

impl Score {
    pub fn total(&self) -> f64 {
        self.value + self.bonus.as_f64()
    }

    /// Orders scores; infinite bonuses are all equal to each other.
    pub fn compare(&self, other: &Score) -> Ordering {
        match (self.bonus, other.bonus) {
            (Bonus::Infinite, Bonus::Infinite) => Ordering::Equal,
            (Bonus::Infinite, _) => Ordering::Greater,
            (_, Bonus::Infinite) => Ordering::Less,
            (Bonus::Finite(a), Bonus::Finite(b)) => (self.value + a).total_cmp(&(other.value + b)),
        }
    }
}

/// Index of the best score; ties go to the lowest index.
pub fn argmax_lowest(scores: &[Score]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        match best {
            Some(b) if s.compare(&scores[b]) != Ordering::Greater => {}
            _ => best = Some(i),
        }
    }
    best
}
