//! Region bucketing and fixed-size per-region token sampling.
//!
//! Every draw comes from its own ChaCha stream keyed by a SHA-256 of
//! `(seed_root, video_id, frame_index, region)`, so a sample depends only on
//! its identity and never on iteration order or thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::container::{RegionCode, TokenGrid};

pub const DEFAULT_K: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegionError {
    #[error("region {0} has no tokens in this frame")]
    EmptyRegion(RegionCode),
    #[error("invalid region set: {0}")]
    InvalidRegionSet(String),
    #[error("k must be at least 1")]
    InvalidK,
}

/// A non-empty, duplicate-free set of anatomical regions in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionSet(Vec<RegionCode>);

impl RegionSet {
    pub fn new(regions: impl IntoIterator<Item = RegionCode>) -> Result<Self, RegionError> {
        let mut v: Vec<RegionCode> = regions.into_iter().collect();
        if v.contains(&RegionCode::Background) {
            return Err(RegionError::InvalidRegionSet("background is not a region".into()));
        }
        v.sort();
        let before = v.len();
        v.dedup();
        if v.len() != before {
            return Err(RegionError::InvalidRegionSet("duplicate region".into()));
        }
        if v.is_empty() {
            return Err(RegionError::InvalidRegionSet("empty".into()));
        }
        Ok(RegionSet(v))
    }

    /// Eyes, mouth, nose.
    pub fn emn() -> Self {
        RegionSet(vec![RegionCode::Eyes, RegionCode::Mouth, RegionCode::Nose])
    }

    pub fn emn_skin() -> Self {
        RegionSet(vec![RegionCode::Eyes, RegionCode::Mouth, RegionCode::Nose, RegionCode::Skin])
    }

    pub fn eyes_mouth() -> Self {
        RegionSet(vec![RegionCode::Eyes, RegionCode::Mouth])
    }

    pub fn all_five() -> Self {
        RegionSet(RegionCode::ANATOMICAL.to_vec())
    }

    pub fn regions(&self) -> &[RegionCode] {
        &self.0
    }

    pub fn contains(&self, region: RegionCode) -> bool {
        self.0.contains(&region)
    }

    /// Unordered pairs in canonical order: for EMN, (eyes,mouth), (eyes,nose), (mouth,nose).
    pub fn pairs(&self) -> Vec<(RegionCode, RegionCode)> {
        let mut out = Vec::new();
        for (i, &a) in self.0.iter().enumerate() {
            for &b in &self.0[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }

    /// Bitmask id used in file headers: bit `code - 1` per member region.
    pub fn id(&self) -> u8 {
        self.0.iter().fold(0u8, |acc, r| acc | 1 << (r.code() - 1))
    }

    pub fn from_id(id: u8) -> Result<Self, RegionError> {
        if id & !0b1_1111 != 0 {
            return Err(RegionError::InvalidRegionSet(format!("id {id:#x}")));
        }
        RegionSet::new(
            RegionCode::ANATOMICAL
                .into_iter()
                .filter(|r| id & (1 << (r.code() - 1)) != 0),
        )
    }

    pub fn name(&self) -> String {
        match self {
            s if *s == Self::emn() => "emn".into(),
            s if *s == Self::emn_skin() => "emn_skin".into(),
            s if *s == Self::eyes_mouth() => "em".into(),
            s if *s == Self::all_five() => "all".into(),
            s => s.0.iter().map(|r| r.name()).collect::<Vec<_>>().join("+"),
        }
    }
}

impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for RegionSet {
    type Err = RegionError;

    /// Accepts `emn`, `emn_skin`, `em`, `all`, or region names joined by `,` or `+`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "emn" => Ok(Self::emn()),
            "emn_skin" | "emns" => Ok(Self::emn_skin()),
            "em" => Ok(Self::eyes_mouth()),
            "all" => Ok(Self::all_five()),
            other => RegionSet::new(
                other
                    .split([',', '+'])
                    .map(|name| {
                        RegionCode::from_name(name.trim())
                            .ok_or_else(|| RegionError::InvalidRegionSet(format!("unknown region {name:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPolicy {
    pub k: usize,
    pub seed_root: u64,
    pub region_set: RegionSet,
}

impl SamplingPolicy {
    pub fn new(k: usize, seed_root: u64, region_set: RegionSet) -> Result<Self, RegionError> {
        if k == 0 {
            return Err(RegionError::InvalidK);
        }
        Ok(SamplingPolicy {
            k,
            seed_root,
            region_set,
        })
    }
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            k: DEFAULT_K,
            seed_root: 0,
            region_set: RegionSet::emn(),
        }
    }
}

/// Identity of one sampling draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId<'a> {
    pub video_id: &'a str,
    pub frame_index: u32,
    pub region: RegionCode,
}

/// The RNG for one stream; a pure function of `(seed_root, stream)`.
pub fn stream_rng(seed_root: u64, stream: StreamId<'_>) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"dca/region-sample/v1");
    h.update(seed_root.to_le_bytes());
    h.update((stream.video_id.len() as u64).to_le_bytes());
    h.update(stream.video_id.as_bytes());
    h.update(stream.frame_index.to_le_bytes());
    h.update([stream.region.code()]);
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSample {
    pub region: RegionCode,
    /// K × D sampled tokens.
    pub matrix: Array2<f64>,
    /// Source patch index of each sampled row.
    pub indices: Vec<usize>,
    pub drew_with_replacement: bool,
    pub source_token_count: usize,
}

/// Buckets patch indices by label, background excluded.
pub fn assign_regions<A>(grid: &TokenGrid<A>) -> BTreeMap<RegionCode, Vec<usize>> {
    let mut map: BTreeMap<RegionCode, Vec<usize>> = BTreeMap::new();
    for (i, &label) in grid.labels.iter().enumerate() {
        if label != RegionCode::Background {
            map.entry(label).or_default().push(i);
        }
    }
    map
}

/// Draws `k` indices from `pool`: uniformly without replacement when the pool
/// holds at least `k` entries, uniformly with replacement otherwise.
fn draw_indices(pool: &[usize], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = pool.len();
    if n >= k {
        // partial Fisher-Yates; u64 ranges keep the stream identical on 32/64-bit targets
        let mut scratch = pool.to_vec();
        for i in 0..k {
            let j = rng.random_range(i as u64..n as u64) as usize;
            scratch.swap(i, j);
        }
        scratch.truncate(k);
        (scratch, false)
    } else {
        let picks = (0..k)
            .map(|_| pool[rng.random_range(0..n as u64) as usize])
            .collect();
        (picks, true)
    }
}

pub fn sample_region<A>(
    grid: &TokenGrid<A>,
    region: RegionCode,
    policy: &SamplingPolicy,
    stream: StreamId<'_>,
) -> Result<RegionSample, RegionError>
where
    A: Copy + Into<f64>,
{
    let pool: Vec<usize> = grid
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| (l == region).then_some(i))
        .collect();
    sample_from_pool(grid, region, &pool, policy, stream)
}

pub(crate) fn sample_from_pool<A>(
    grid: &TokenGrid<A>,
    region: RegionCode,
    pool: &[usize],
    policy: &SamplingPolicy,
    stream: StreamId<'_>,
) -> Result<RegionSample, RegionError>
where
    A: Copy + Into<f64>,
{
    if pool.is_empty() {
        return Err(RegionError::EmptyRegion(region));
    }
    if policy.k == 0 {
        return Err(RegionError::InvalidK);
    }
    let mut rng = stream_rng(policy.seed_root, stream);
    let (indices, with_replacement) = draw_indices(pool, policy.k, &mut rng);
    let d = grid.feature_dim();
    let matrix = Array2::from_shape_fn((policy.k, d), |(row, col)| grid.tokens[[indices[row], col]].into());
    Ok(RegionSample {
        region,
        matrix,
        indices,
        drew_with_replacement: with_replacement,
        source_token_count: pool.len(),
    })
}
