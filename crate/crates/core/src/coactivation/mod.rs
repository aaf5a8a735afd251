//! Dimensional coactivation (DCA) and its comparison operators.
//!
//! All operators take two `K × D` region sample matrices of the same shape.
//! DCA keeps the feature-dimension axis and the raw magnitude:
//!
//! ```text
//! dca(F1, F2)[d] = (1/K) Σ_k F1[k,d]·F2[k,d]  =  diag(F1ᵀF2)[d] / K
//! ```
//!
//! The remaining operators each add back something DCA leaves out:
//! per-column L2 normalization (`cosine_dim`), within-sample centering
//! (`cross_covariance`), centering + L2 + cross-dimension coupling
//! (`pnka_dim`), or a collapse to one scalar per region pair.
//!
//! Arithmetic is `f64` with loops in a fixed row-major order so results are
//! identical across platforms. Cosine-like quantities with a denominator
//! below [`DEGENERATE_NORM`] evaluate to 0.

mod dataset;
mod fingerprint;

pub use dataset::{FingerprintRecord, FingerprintSet, FINGERPRINT_MAGIC, FINGERPRINT_VERSION};
pub use fingerprint::{fingerprint, fingerprint_raw, Fingerprint, FrameOutcome, PairVector};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use thiserror::Error;

use crate::binio::FormatError;
use crate::normalize::NormalizeError;
use crate::regions::RegionError;

pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoactivationError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op} needs at least {need} sampled rows, got {got}")]
    TooFewRows { op: &'static str, need: usize, got: usize },
    #[error("unknown variant {name:?}; valid variants: {}", VariantId::ALL.map(|v| v.name()).join(", "))]
    UnknownVariant { name: String },
    #[error("unknown variant id {0}")]
    UnknownVariantId(u8),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

type Result<T> = std::result::Result<T, CoactivationError>;

fn check(f1: &ArrayView2<'_, f64>, f2: &ArrayView2<'_, f64>, op: &'static str, min_rows: usize) -> Result<()> {
    if f1.dim() != f2.dim() {
        return Err(CoactivationError::ShapeMismatch {
            left: f1.dim(),
            right: f2.dim(),
        });
    }
    if f1.nrows() < min_rows {
        return Err(CoactivationError::TooFewRows {
            op,
            need: min_rows,
            got: f1.nrows(),
        });
    }
    Ok(())
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den < DEGENERATE_NORM {
        0.0
    } else {
        num / den
    }
}

/// Subtracts each column's mean over the K rows.
fn center_columns(f: &ArrayView2<'_, f64>) -> Array2<f64> {
    let mean = f.mean_axis(Axis(0)).expect("at least one row");
    let mut out = f.to_owned();
    for mut row in out.rows_mut() {
        row -= &mean;
    }
    out
}

/// Scales each column to unit L2 norm; degenerate columns become zero.
fn l2_normalize_columns(f: &mut Array2<f64>) {
    for mut col in f.columns_mut() {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < DEGENERATE_NORM {
            col.fill(0.0);
        } else {
            col /= norm;
        }
    }
}

/// K × K inner products between rows.
fn row_gram(f: &ArrayView2<'_, f64>) -> Array2<f64> {
    let k = f.nrows();
    let mut g = Array2::zeros((k, k));
    for a in 0..k {
        for b in a..k {
            let v: f64 = f.row(a).iter().zip(f.row(b)).map(|(x, y)| x * y).sum();
            g[[a, b]] = v;
            g[[b, a]] = v;
        }
    }
    g
}

fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-dimension mean coactivation, `diag(f1ᵀf2) / K`.
pub fn dca(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    check(&f1, &f2, "dca", 1)?;
    let k = f1.nrows();
    let mut out = Array1::zeros(f1.ncols());
    for (r1, r2) in f1.rows().into_iter().zip(f2.rows()) {
        for ((o, a), b) in out.iter_mut().zip(r1).zip(r2) {
            *o += a * b;
        }
    }
    out /= k as f64;
    Ok(out)
}

/// Per-dimension cosine between matching columns.
pub fn cosine_dim(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    check(&f1, &f2, "cosine_dim", 1)?;
    Ok(f1
        .columns()
        .into_iter()
        .zip(f2.columns())
        .map(|(a, b)| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na < DEGENERATE_NORM || nb < DEGENERATE_NORM {
                0.0
            } else {
                dot / (na * nb)
            }
        })
        .collect())
}

/// DCA after removing each matrix's own column means.
pub fn cross_covariance(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    check(&f1, &f2, "cross_covariance", 2)?;
    let c1 = center_columns(&f1);
    let c2 = center_columns(&f2);
    dca(c1.view(), c2.view())
}

/// Centered, column-normalized, fully coupled per-dimension similarity.
///
/// With `C = f1ᵀf2` over centered unit-norm columns, returns
/// `(Σ_j C[d,j] + Σ_j C[j,d]) / 2`. Averaging row and column sums keeps the
/// operator symmetric in its arguments while still folding off-diagonal mass
/// onto the per-dimension axis. Computed in O(KD) via row sums.
pub fn pnka_dim(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    check(&f1, &f2, "pnka_dim", 2)?;
    let mut n1 = center_columns(&f1);
    let mut n2 = center_columns(&f2);
    l2_normalize_columns(&mut n1);
    l2_normalize_columns(&mut n2);
    let s1 = n1.sum_axis(Axis(1));
    let s2 = n2.sum_axis(Axis(1));
    let d = f1.ncols();
    let mut row_sums = Array1::<f64>::zeros(d);
    let mut col_sums = Array1::<f64>::zeros(d);
    for k in 0..f1.nrows() {
        for j in 0..d {
            row_sums[j] += n1[[k, j]] * s2[k];
            col_sums[j] += n2[[k, j]] * s1[k];
        }
    }
    Ok((row_sums + col_sums) * 0.5)
}

/// `‖f1ᵀf2‖_F / K`, via the K × K row Grams.
pub fn gram_frobenius(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<f64> {
    check(&f1, &f2, "gram_frobenius", 1)?;
    let sq = frobenius_inner(&row_gram(&f1), &row_gram(&f2)).max(0.0);
    Ok(sq.sqrt() / f1.nrows() as f64)
}

/// Cosine between the two region mean vectors.
pub fn cos_region_means(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<f64> {
    check(&f1, &f2, "cos_region_means", 1)?;
    let m1 = f1.mean_axis(Axis(0)).expect("rows");
    let m2 = f2.mean_axis(Axis(0)).expect("rows");
    let dot = m1.dot(&m2);
    let n1 = m1.dot(&m1).sqrt();
    let n2 = m2.dot(&m2).sqrt();
    Ok(if n1 < DEGENERATE_NORM || n2 < DEGENERATE_NORM {
        0.0
    } else {
        dot / (n1 * n2)
    })
}

/// Average of the DCA vector over dimensions.
pub fn mean_dca(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<f64> {
    let v = dca(f1, f2)?;
    Ok(v.sum() / v.len() as f64)
}

/// Linear CKA with sampled patches as observations (column-mean centering).
pub fn patch_cka(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<f64> {
    check(&f1, &f2, "patch_cka", 2)?;
    let c1 = center_columns(&f1);
    let c2 = center_columns(&f2);
    let g1 = row_gram(&c1.view());
    let g2 = row_gram(&c2.view());
    let cross = frobenius_inner(&g1, &g2);
    let den = frobenius_inner(&g1, &g1).sqrt() * frobenius_inner(&g2, &g2).sqrt();
    Ok(safe_ratio(cross, den).clamp(0.0, 1.0))
}

fn directed_nn_cosine(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>) -> f64 {
    let norms_b: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let total: f64 = a
        .rows()
        .into_iter()
        .map(|ra| {
            let na = ra.dot(&ra).sqrt();
            b.rows()
                .into_iter()
                .zip(&norms_b)
                .map(|(rb, nb)| {
                    if na < DEGENERATE_NORM || *nb < DEGENERATE_NORM {
                        0.0
                    } else {
                        ra.dot(&rb) / (na * nb)
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / a.nrows() as f64
}

/// Mean best-match row cosine, averaged over both directions.
pub fn nn_cosine(f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<f64> {
    check(&f1, &f2, "nn_cosine", 1)?;
    Ok(0.5 * (directed_nn_cosine(&f1, &f2) + directed_nn_cosine(&f2, &f1)))
}

/// Which pair operator builds a fingerprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum VariantId {
    Dca = 0,
    CosineDim = 1,
    CrossCovariance = 2,
    PnkaDim = 3,
    GramFrobenius = 4,
    CosRegionMeans = 5,
    PatchCka = 6,
    MeanDca = 7,
    NnCosine = 8,
}

/// Output of one pair operator.
#[derive(Debug, Clone, PartialEq)]
pub enum PairOutput {
    Vector(Array1<f64>),
    Scalar(f64),
}

impl PairOutput {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            PairOutput::Vector(v) => v.as_slice().expect("contiguous"),
            PairOutput::Scalar(s) => std::slice::from_ref(s),
        }
    }
}

impl VariantId {
    pub const ALL: [VariantId; 9] = [
        VariantId::Dca,
        VariantId::CosineDim,
        VariantId::CrossCovariance,
        VariantId::PnkaDim,
        VariantId::GramFrobenius,
        VariantId::CosRegionMeans,
        VariantId::PatchCka,
        VariantId::MeanDca,
        VariantId::NnCosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::Dca => "dca",
            VariantId::CosineDim => "cosine_dim",
            VariantId::CrossCovariance => "cross_covariance",
            VariantId::PnkaDim => "pnka_dim",
            VariantId::GramFrobenius => "gram_frobenius",
            VariantId::CosRegionMeans => "cos_region_means",
            VariantId::PatchCka => "patch_cka",
            VariantId::MeanDca => "mean_dca",
            VariantId::NnCosine => "nn_cosine",
        }
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.id() == id)
            .ok_or(CoactivationError::UnknownVariantId(id))
    }

    /// Scalar variants emit one value per region pair.
    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            VariantId::GramFrobenius
                | VariantId::CosRegionMeans
                | VariantId::PatchCka
                | VariantId::MeanDca
                | VariantId::NnCosine
        )
    }

    /// Rows required by the operator.
    pub fn min_rows(self) -> usize {
        match self {
            VariantId::CrossCovariance | VariantId::PnkaDim | VariantId::PatchCka => 2,
            _ => 1,
        }
    }

    /// Values contributed per region pair at feature dim `d`.
    pub fn pair_len(self, d: usize) -> usize {
        if self.is_scalar() {
            1
        } else {
            d
        }
    }

    pub fn apply(self, f1: ArrayView2<'_, f64>, f2: ArrayView2<'_, f64>) -> Result<PairOutput> {
        use PairOutput::{Scalar, Vector};
        Ok(match self {
            VariantId::Dca => Vector(dca(f1, f2)?),
            VariantId::CosineDim => Vector(cosine_dim(f1, f2)?),
            VariantId::CrossCovariance => Vector(cross_covariance(f1, f2)?),
            VariantId::PnkaDim => Vector(pnka_dim(f1, f2)?),
            VariantId::GramFrobenius => Scalar(gram_frobenius(f1, f2)?),
            VariantId::CosRegionMeans => Scalar(cos_region_means(f1, f2)?),
            VariantId::PatchCka => Scalar(patch_cka(f1, f2)?),
            VariantId::MeanDca => Scalar(mean_dca(f1, f2)?),
            VariantId::NnCosine => Scalar(nn_cosine(f1, f2)?),
        })
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantId {
    type Err = CoactivationError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| CoactivationError::UnknownVariant { name: s.to_owned() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dca_single_patch_is_product() {
        let a = array![[1.0, -2.0, 3.0]];
        let b = array![[4.0, 5.0, -0.5]];
        assert_eq!(dca(a.view(), b.view()).unwrap(), array![4.0, -10.0, -1.5]);
    }

    #[test]
    fn dca_zero_annihilates() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let z = Array2::zeros((2, 2));
        assert_eq!(dca(a.view(), z.view()).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        let a = Array2::<f64>::zeros((3, 2));
        let b = Array2::<f64>::zeros((3, 4));
        assert!(matches!(dca(a.view(), b.view()), Err(CoactivationError::ShapeMismatch { .. })));
        let one = Array2::<f64>::zeros((1, 2));
        assert!(matches!(
            cross_covariance(one.view(), one.view()),
            Err(CoactivationError::TooFewRows { need: 2, got: 1, .. })
        ));
        assert!(pnka_dim(one.view(), one.view()).is_err());
        assert!(patch_cka(one.view(), one.view()).is_err());
    }

    #[test]
    fn cosine_self_and_antipodal() {
        let a = array![[1.0, 0.5], [2.0, -1.0], [0.3, 4.0]];
        assert!(cosine_dim(a.view(), a.view()).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let neg = -&a;
        assert!(cosine_dim(a.view(), neg.view()).unwrap().iter().all(|v| (v + 1.0).abs() < 1e-15));
        let z = Array2::zeros((3, 2));
        assert_eq!(cosine_dim(a.view(), z.view()).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn cross_covariance_constant_and_self() {
        let constant = array![[2.0, -1.0], [2.0, -1.0], [2.0, -1.0]];
        let other = array![[1.0, 5.0], [-3.0, 2.0], [0.5, 0.0]];
        assert!(cross_covariance(constant.view(), other.view()).unwrap().iter().all(|v| v.abs() < 1e-15));
        let self_cov = cross_covariance(other.view(), other.view()).unwrap();
        let var = other.var_axis(Axis(0), 0.0);
        for (a, b) in self_cov.iter().zip(&var) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pnka_identity_coupling() {
        // zero-mean orthonormal columns
        let s = 0.5;
        let f = array![[s, s], [s, -s], [-s, s], [-s, -s]];
        let out = pnka_dim(f.view(), f.view()).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pnka_orthogonal_spaces() {
        let s = 0.5;
        let f1 = array![[s, 0.0], [-s, 0.0], [s, 0.0], [-s, 0.0]];
        let f2 = array![[s, s], [s, -s], [-s, -s], [-s, s]];
        let out = pnka_dim(f1.view(), f2.view()).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12), "{out}");
    }

    #[test]
    fn gram_frobenius_cases() {
        let e1 = array![[1.0, 0.0, 0.0]];
        assert!((gram_frobenius(e1.view(), e1.view()).unwrap() - 1.0).abs() < 1e-15);
        let z = Array2::zeros((1, 3));
        assert_eq!(gram_frobenius(e1.view(), z.view()).unwrap(), 0.0);
    }

    #[test]
    fn scalar_self_comparisons() {
        let f = array![[1.0, 2.0, -1.0], [0.5, -1.0, 3.0], [2.0, 0.0, 1.0]];
        assert!((cos_region_means(f.view(), f.view()).unwrap() - 1.0).abs() < 1e-12);
        assert!((patch_cka(f.view(), f.view()).unwrap() - 1.0).abs() < 1e-12);
        assert!((nn_cosine(f.view(), f.view()).unwrap() - 1.0).abs() < 1e-12);
        let ones = array![[1.0, 1.0, 1.0, 1.0]];
        assert_eq!(mean_dca(ones.view(), ones.view()).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_scalars_are_zero() {
        let z = Array2::zeros((3, 2));
        let f = array![[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]];
        assert_eq!(cos_region_means(z.view(), f.view()).unwrap(), 0.0);
        assert_eq!(patch_cka(z.view(), f.view()).unwrap(), 0.0);
        assert_eq!(nn_cosine(z.view(), f.view()).unwrap(), 0.0);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in VariantId::ALL {
            assert_eq!(v.name().parse::<VariantId>().unwrap(), v);
            assert_eq!(VariantId::from_id(v.id()).unwrap(), v);
        }
        let err = "dcaa".parse::<VariantId>().unwrap_err().to_string();
        assert!(err.contains("cross_covariance") && err.contains("nn_cosine"), "{err}");
    }
}
