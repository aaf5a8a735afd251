//! Split-level token normalization and the fingerprint standard scaler.
//!
//! Token statistics are fitted once on the training split and then applied
//! unchanged everywhere. This is global per-dimension standardization, not
//! within-sample centering: a normalized frame keeps whatever per-sample mean
//! it had relative to the split.

use std::borrow::Borrow;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use thiserror::Error;

use crate::binio::{ByteReader, ByteWriter, FormatError};
use crate::container::TokenGrid;

pub const STATS_MAGIC: [u8; 4] = *b"DCAS";
pub const STATS_VERSION: u16 = 1;
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Scaler columns whose standard deviation falls below this are centered only.
pub const SCALER_MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("no tokens to fit statistics on")]
    EmptyStream,
    #[error("no rows to fit the scaler on")]
    EmptyRows,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Per-dimension token statistics of a source split.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub epsilon: f64,
    pub split_tag: String,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Stats that leave tokens unchanged.
    pub fn identity(dim: usize) -> Self {
        NormStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            epsilon: 0.0,
            split_tag: "identity".into(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new(&STATS_MAGIC, STATS_VERSION);
        w.u32(self.dim() as u32);
        w.str(&self.split_tag);
        w.f64s(&self.mean);
        w.f64s(&self.std);
        w.f64(self.epsilon);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = ByteReader::open(bytes, &STATS_MAGIC, "DCAS", STATS_VERSION)?;
        let dim = r.u32("feature dim")? as usize;
        let split_tag = r.str("split tag")?;
        let mean = r.f64s(dim, "means")?;
        let std = r.f64s(dim, "stds")?;
        let epsilon = r.f64("epsilon")?;
        r.finish()?;
        let stats = NormStats {
            mean,
            std,
            epsilon,
            split_tag,
        };
        if !stats.is_valid() {
            return Err(FormatError::Invalid("non-finite or degenerate statistics".into()));
        }
        Ok(stats)
    }

    fn is_valid(&self) -> bool {
        self.epsilon.is_finite()
            && self.mean.iter().all(|m| m.is_finite())
            && self.std.iter().all(|s| s.is_finite() && s + self.epsilon > 0.0)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), NormalizeError> {
        fs::write(path, self.to_bytes()).map_err(FormatError::from)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, NormalizeError> {
        let bytes = fs::read(path).map_err(FormatError::from)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

/// Streaming mean/M2 accumulator. Shards can be merged in any grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct Welford {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Welford {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn push<I>(&mut self, row: I)
    where
        I: IntoIterator,
        I::Item: Into<f64>,
    {
        self.count += 1;
        let n = self.count as f64;
        for ((x, mean), m2) in row.into_iter().zip(&mut self.mean).zip(&mut self.m2) {
            let x = x.into();
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    pub fn push_grid(&mut self, grid: &TokenGrid<f32>) -> Result<(), NormalizeError> {
        if grid.feature_dim() != self.dim() {
            return Err(NormalizeError::DimensionMismatch {
                expected: self.dim(),
                found: grid.feature_dim(),
            });
        }
        for row in grid.tokens.rows() {
            self.push(row.iter().copied());
        }
        Ok(())
    }

    /// Combines two partial accumulators (pairwise update).
    pub fn merge(&mut self, other: &Welford) {
        assert_eq!(self.dim(), other.dim(), "merging accumulators of different dims");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for d in 0..self.dim() {
            let delta = other.mean[d] - self.mean[d];
            self.mean[d] += delta * nb / n;
            self.m2[d] += other.m2[d] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn finish(&self, epsilon: f64, split_tag: impl Into<String>) -> Result<NormStats, NormalizeError> {
        if self.count == 0 {
            return Err(NormalizeError::EmptyStream);
        }
        let n = self.count as f64;
        Ok(NormStats {
            mean: self.mean.clone(),
            std: self.m2.iter().map(|m2| (m2 / n).max(0.0).sqrt()).collect(),
            epsilon,
            split_tag: split_tag.into(),
        })
    }
}

/// Fits per-dimension mean and population std over every patch of every frame.
pub fn fit_norm_stats<I>(frames: I, split_tag: &str) -> Result<NormStats, NormalizeError>
where
    I: IntoIterator,
    I::Item: Borrow<TokenGrid<f32>>,
{
    let mut acc: Option<Welford> = None;
    for frame in frames {
        let frame = frame.borrow();
        acc.get_or_insert_with(|| Welford::new(frame.feature_dim()))
            .push_grid(frame)?;
    }
    acc.ok_or(NormalizeError::EmptyStream)?
        .finish(DEFAULT_EPSILON, split_tag)
}

/// Replaces every activation by `(x - mean) / (std + epsilon)`; labels unchanged.
pub fn apply_norm(grid: &TokenGrid<f32>, stats: &NormStats) -> Result<TokenGrid<f64>, NormalizeError> {
    if grid.feature_dim() != stats.dim() {
        return Err(NormalizeError::DimensionMismatch {
            expected: stats.dim(),
            found: grid.feature_dim(),
        });
    }
    let mut tokens = grid.tokens.mapv(f64::from);
    for mut row in tokens.rows_mut() {
        for ((x, mean), std) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *x = (*x - mean) / (std + stats.epsilon);
        }
    }
    Ok(TokenGrid {
        frame_index: grid.frame_index,
        grid_h: grid.grid_h,
        grid_w: grid.grid_w,
        tokens,
        labels: grid.labels.clone(),
    })
}

/// Column standardization statistics for fingerprints.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub fitted_on: String,
}

impl ScalerStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// A scaler that leaves rows unchanged.
    pub fn identity(dim: usize) -> Self {
        ScalerStats {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            fitted_on: "identity".into(),
        }
    }
}

pub fn fit_scaler(rows: ArrayView2<'_, f64>, fitted_on: &str) -> Result<ScalerStats, NormalizeError> {
    if rows.nrows() == 0 {
        return Err(NormalizeError::EmptyRows);
    }
    let mean = rows.mean_axis(Axis(0)).expect("non-empty");
    let scale = rows.std_axis(Axis(0), 0.0);
    Ok(ScalerStats {
        mean: mean.to_vec(),
        scale: scale.to_vec(),
        fitted_on: fitted_on.into(),
    })
}

pub fn apply_scaler(row: ArrayView1<'_, f64>, stats: &ScalerStats) -> Result<Array1<f64>, NormalizeError> {
    if row.len() != stats.dim() {
        return Err(NormalizeError::DimensionMismatch {
            expected: stats.dim(),
            found: row.len(),
        });
    }
    Ok(row
        .iter()
        .zip(&stats.mean)
        .zip(&stats.scale)
        .map(|((x, m), s)| if *s < SCALER_MIN_SCALE { x - m } else { (x - m) / s })
        .collect())
}

pub fn apply_scaler_rows(rows: ArrayView2<'_, f64>, stats: &ScalerStats) -> Result<Array2<f64>, NormalizeError> {
    let mut out = Array2::zeros(rows.raw_dim());
    for (src, mut dst) in rows.rows().into_iter().zip(out.rows_mut()) {
        dst.assign(&apply_scaler(src, stats)?);
    }
    Ok(out)
}
