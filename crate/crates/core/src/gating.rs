//! Random halfspace gating.
//!
//! A gating unit owns `H` fixed hyperplanes and maps a context to an `H`-bit
//! signature: bit `i` is set iff `normal_i · x >= offset_i`, with plane 0 in
//! the least significant bit. A [`GatingSet`] holds one unit per GLN neuron
//! and is shared read-only by every per-action estimator.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GlcbError, Result};

/// Largest supported number of planes per unit (signatures are `u32`).
pub const MAX_PLANES_PER_UNIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Builds a plane from an arbitrary nonzero normal, which is rescaled to unit length.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let norm = l2_norm(&normal);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GlcbError::Config("hyperplane normal must be nonzero and finite".into()));
        }
        Ok(Self {
            normal: normal.into_iter().map(|v| v / norm).collect(),
            offset,
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.normal, x) >= self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingUnit {
    planes: Vec<Hyperplane>,
}

impl GatingUnit {
    pub fn new(planes: Vec<Hyperplane>) -> Result<Self> {
        if planes.is_empty() || planes.len() > MAX_PLANES_PER_UNIT {
            return Err(GlcbError::Config(format!(
                "a gating unit needs 1..={MAX_PLANES_PER_UNIT} planes, got {}",
                planes.len()
            )));
        }
        let dim = planes[0].normal.len();
        if planes.iter().any(|p| p.normal.len() != dim) {
            return Err(GlcbError::Config("planes of one unit must share a dimension".into()));
        }
        Ok(Self { planes })
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    pub fn dim(&self) -> usize {
        self.planes[0].normal.len()
    }

    /// Size of the signature space, `2^H`.
    pub fn num_signatures(&self) -> usize {
        1 << self.planes.len()
    }

    pub fn signature(&self, x: &[f64]) -> Result<u32> {
        check_dim(self.dim(), x.len())?;
        Ok(self.signature_unchecked(x))
    }

    #[inline]
    fn signature_unchecked(&self, x: &[f64]) -> u32 {
        self.planes
            .iter()
            .enumerate()
            .fold(0u32, |s, (i, p)| if p.contains(x) { s | (1 << i) } else { s })
    }
}

/// Where sampled plane offsets are centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasCentering {
    /// `offset = normal · (1/2, …, 1/2) + noise`: every plane passes near the
    /// centre of the unit cube.
    #[default]
    CubeCenter,
    /// `offset = d/2 + noise`, independent of the normal.
    HalfDim,
}

/// Per-neuron gating units plus the context dimension they read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingSet {
    dim: usize,
    units: Vec<GatingUnit>,
}

/// Total signature: one entry per gating unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Signature(pub Vec<u32>);

impl Signature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Concatenates several signatures into one.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Signature>) -> Signature {
        Signature(parts.into_iter().flat_map(|s| s.0.iter().copied()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatingParams {
    pub dim: usize,
    pub units: usize,
    pub planes_per_unit: usize,
    pub bias_scale: f64,
    pub centering: BiasCentering,
}

/// Samples a gating set: normals uniform on the unit sphere, offsets Gaussian
/// with standard deviation `bias_scale` around the chosen centre.
pub fn sample_gating<R: Rng + ?Sized>(params: &GatingParams, rng: &mut R) -> Result<GatingSet> {
    let GatingParams {
        dim,
        units,
        planes_per_unit,
        bias_scale,
        centering,
    } = *params;
    if dim == 0 || units == 0 {
        return Err(GlcbError::Config("gating needs dim >= 1 and units >= 1".into()));
    }
    if planes_per_unit == 0 || planes_per_unit > MAX_PLANES_PER_UNIT {
        return Err(GlcbError::Config(format!(
            "planes_per_unit must be in 1..={MAX_PLANES_PER_UNIT}"
        )));
    }
    if !(bias_scale.is_finite() && bias_scale >= 0.0) {
        return Err(GlcbError::Config("bias_scale must be finite and nonnegative".into()));
    }
    let noise = Normal::new(0.0, bias_scale).expect("validated scale");
    let mut units_out = Vec::with_capacity(units);
    for _ in 0..units {
        let mut planes = Vec::with_capacity(planes_per_unit);
        for _ in 0..planes_per_unit {
            let normal = sample_unit_vector(dim, rng);
            let centre = match centering {
                BiasCentering::CubeCenter => 0.5 * normal.iter().sum::<f64>(),
                BiasCentering::HalfDim => dim as f64 / 2.0,
            };
            let jitter = if bias_scale > 0.0 { noise.sample(rng) } else { 0.0 };
            planes.push(Hyperplane {
                normal,
                offset: centre + jitter,
            });
        }
        units_out.push(GatingUnit { planes });
    }
    Ok(GatingSet { dim, units: units_out })
}

fn sample_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = l2_norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

impl GatingSet {
    pub fn new(dim: usize, units: Vec<GatingUnit>) -> Result<Self> {
        if dim == 0 || units.is_empty() {
            return Err(GlcbError::Config("gating needs dim >= 1 and units >= 1".into()));
        }
        for u in &units {
            check_dim(dim, u.dim())?;
        }
        Ok(Self { dim, units })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn units(&self) -> &[GatingUnit] {
        &self.units
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    /// Largest signature space over all units.
    pub fn num_signatures(&self) -> usize {
        self.units.iter().map(GatingUnit::num_signatures).max().unwrap_or(1)
    }

    pub fn total_signature(&self, x: &[f64]) -> Result<Signature> {
        check_dim(self.dim, x.len())?;
        Ok(Signature(self.units.iter().map(|u| u.signature_unchecked(x)).collect()))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}
