use ndarray::Array1;

use super::{CoactivationError, VariantId};
use crate::container::{RegionCode, TokenGrid};
use crate::normalize::{apply_norm, NormStats};
use crate::regions::{assign_regions, sample_from_pool, RegionSample, RegionSet, SamplingPolicy, StreamId};

/// One region pair's per-dimension output.
#[derive(Debug, Clone, PartialEq)]
pub struct PairVector {
    pub pair: (RegionCode, RegionCode),
    pub values: Array1<f64>,
}

/// Concatenated pair outputs for one frame, pairs in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub values: Vec<f64>,
    pub region_set: RegionSet,
    pub variant: VariantId,
    pub video_id: String,
    pub frame_index: u32,
}

impl Fingerprint {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Splits the fingerprint back into its per-pair blocks.
    pub fn blocks(&self) -> impl Iterator<Item = ((RegionCode, RegionCode), &[f64])> {
        let pairs = self.region_set.pairs();
        let width = self.values.len() / pairs.len();
        pairs.into_iter().zip(self.values.chunks(width))
    }

    /// Per-pair vectors; `None` for scalar variants.
    pub fn pair_vectors(&self) -> Option<Vec<PairVector>> {
        if self.variant.is_scalar() {
            return None;
        }
        Some(
            self.blocks()
                .map(|(pair, vals)| PairVector {
                    pair,
                    values: Array1::from(vals.to_vec()),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameOutcome {
    Fingerprint(Fingerprint),
    /// At least one region of the active set had no tokens.
    Skipped { frame_index: u32, missing: Vec<RegionCode> },
}

impl FrameOutcome {
    pub fn fingerprint(self) -> Option<Fingerprint> {
        match self {
            FrameOutcome::Fingerprint(f) => Some(f),
            FrameOutcome::Skipped { .. } => None,
        }
    }
}

/// Fingerprints an already-normalized frame.
pub fn fingerprint<A>(
    grid: &TokenGrid<A>,
    video_id: &str,
    policy: &SamplingPolicy,
    variant: VariantId,
) -> Result<FrameOutcome, CoactivationError>
where
    A: Copy + Into<f64>,
{
    let buckets = assign_regions(grid);
    let missing: Vec<RegionCode> = policy
        .region_set
        .regions()
        .iter()
        .copied()
        .filter(|r| !buckets.contains_key(r))
        .collect();
    if !missing.is_empty() {
        return Ok(FrameOutcome::Skipped {
            frame_index: grid.frame_index,
            missing,
        });
    }
    if policy.k < variant.min_rows() {
        return Err(CoactivationError::TooFewRows {
            op: variant.name(),
            need: variant.min_rows(),
            got: policy.k,
        });
    }

    let samples = policy
        .region_set
        .regions()
        .iter()
        .map(|&region| {
            let stream = StreamId {
                video_id,
                frame_index: grid.frame_index,
                region,
            };
            sample_from_pool(grid, region, &buckets[&region], policy, stream).map(|s| (region, s))
        })
        .collect::<Result<Vec<(RegionCode, RegionSample)>, _>>()?;
    let get = |r: RegionCode| &samples.iter().find(|(code, _)| *code == r).expect("sampled").1;

    let pairs = policy.region_set.pairs();
    let mut values = Vec::with_capacity(pairs.len() * variant.pair_len(grid.feature_dim()));
    for (a, b) in pairs {
        let out = variant.apply(get(a).matrix.view(), get(b).matrix.view())?;
        values.extend_from_slice(out.as_slice());
    }
    Ok(FrameOutcome::Fingerprint(Fingerprint {
        values,
        region_set: policy.region_set.clone(),
        variant,
        video_id: video_id.to_owned(),
        frame_index: grid.frame_index,
    }))
}

/// Normalizes a raw frame with split statistics, then fingerprints it.
pub fn fingerprint_raw(
    grid: &TokenGrid<f32>,
    stats: &NormStats,
    video_id: &str,
    policy: &SamplingPolicy,
    variant: VariantId,
) -> Result<FrameOutcome, CoactivationError> {
    let normalized = apply_norm(grid, stats)?;
    fingerprint(&normalized, video_id, policy, variant)
}
