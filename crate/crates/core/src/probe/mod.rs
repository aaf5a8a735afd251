//! Logistic-regression validation probe over standardized fingerprints.
//!
//! The objective follows the usual library convention: an unpenalized bias,
//! `0.5‖w‖²` plus `C` times the sample-weighted log loss,
//!
//! ```text
//! J(w, b) = 0.5‖w‖² + C Σ_i s_i · log(1 + exp(−ỹ_i (wᵀx̂_i + b)))     ỹ ∈ {−1, +1}
//! ```
//!
//! with class-balanced weights `s_i = N / (2 N_{y_i})`. The solver works on
//! `J / (C Σ s_i)`, which has the same minimizer and keeps the gradient
//! tolerance independent of the training-set size.

mod lbfgs;

pub use lbfgs::{minimize, LbfgsOptions, LbfgsResult, StopReason};

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use thiserror::Error;

use crate::binio::{ByteReader, ByteWriter, FormatError};
use crate::coactivation::VariantId;
use crate::normalize::{apply_scaler, apply_scaler_rows, fit_scaler, NormalizeError, ScalerStats};
use crate::regions::RegionSet;
use crate::Label;

pub const MODEL_MAGIC: [u8; 4] = *b"DCLM";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("row {row} is unlabeled")]
    Unlabeled { row: usize },
    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("dimension mismatch: model expects M={expected}, got M={found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid probe config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Inverse regularization strength.
    pub c_value: f64,
    pub max_iter: usize,
    /// Recorded for provenance; the solver is deterministic and never draws from it.
    pub seed: u64,
    pub tolerance: f64,
    pub class_balanced: bool,
    pub memory: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            c_value: 0.1,
            max_iter: 2000,
            seed: 42,
            tolerance: 1e-6,
            class_balanced: true,
            memory: 10,
        }
    }
}

impl ProbeConfig {
    fn validate(&self) -> Result<(), ProbeError> {
        if !(self.c_value > 0.0 && self.c_value.is_finite()) {
            return Err(ProbeError::InvalidConfig(format!("C must be > 0, got {}", self.c_value)));
        }
        if self.max_iter == 0 {
            return Err(ProbeError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.memory == 0 {
            return Err(ProbeError::InvalidConfig("memory must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(ProbeError::InvalidConfig("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// A fitted probe: scaler, linear weights and the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaler: ScalerStats,
    pub config: ProbeConfig,
    /// Weights applied to real and fake rows during fitting.
    pub class_weights: [f64; 2],
    pub variant: Option<VariantId>,
    pub region_set: Option<RegionSet>,
    pub iterations: u32,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective `J` at the start and after every accepted step.
    pub loss_history: Vec<f64>,
    pub grad_inf_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeFit {
    pub model: ProbeModel,
    pub report: FitReport,
}

/// `[real, fake]` weights. Balanced weights are `N / (2 N_class)`.
pub fn class_weights(labels: &[Label], balanced: bool) -> Result<[f64; 2], ProbeError> {
    let n_fake = labels.iter().filter(|l| **l == Label::Fake).count();
    let n_real = labels.iter().filter(|l| **l == Label::Real).count();
    if let Some(row) = labels.iter().position(|l| *l == Label::Unlabeled) {
        return Err(ProbeError::Unlabeled { row });
    }
    if n_fake == 0 || n_real == 0 {
        return Err(ProbeError::SingleClass);
    }
    if !balanced {
        return Ok([1.0, 1.0]);
    }
    let n = labels.len() as f64;
    Ok([n / (2.0 * n_real as f64), n / (2.0 * n_fake as f64)])
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// The weighted, L2-penalized logistic loss over already-standardized rows.
/// Parameters are laid out as `[w_0 .. w_{M-1}, b]`.
pub struct LogisticObjective<'a> {
    x: ArrayView2<'a, f64>,
    targets: Vec<f64>,
    sample_weights: Vec<f64>,
    c_value: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: ArrayView2<'a, f64>, labels: &[Label], weights: [f64; 2], c_value: f64) -> Self {
        let targets = labels.iter().map(|l| if *l == Label::Fake { 1.0 } else { 0.0 }).collect();
        let sample_weights = labels
            .iter()
            .map(|l| if *l == Label::Fake { weights[1] } else { weights[0] })
            .collect();
        LogisticObjective {
            x,
            targets,
            sample_weights,
            c_value,
        }
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols() + 1
    }

    pub fn total_weight(&self) -> f64 {
        self.sample_weights.iter().sum()
    }

    pub fn sample_weights(&self) -> &[f64] {
        &self.sample_weights
    }

    /// Objective value and gradient.
    pub fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let m = self.x.ncols();
        let (w, b) = (&theta[..m], theta[m]);
        let mut grad = vec![0.0; m + 1];
        let mut data = 0.0;
        for ((row, &y), &s) in self.x.rows().into_iter().zip(&self.targets).zip(&self.sample_weights) {
            let z: f64 = row.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b;
            let signed = if y > 0.5 { -z } else { z };
            data += s * softplus(signed);
            let r = s * (sigmoid(z) - y);
            for (g, x) in grad.iter_mut().zip(row) {
                *g += r * x;
            }
            grad[m] += r;
        }
        let penalty = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for (g, wj) in grad.iter_mut().zip(w) {
            *g = self.c_value * *g + wj;
        }
        grad[m] *= self.c_value;
        (penalty + self.c_value * data, grad)
    }
}

fn check_rows(rows: &ArrayView2<'_, f64>, labels: &[Label]) -> Result<(), ProbeError> {
    if rows.nrows() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            rows: rows.nrows(),
            labels: labels.len(),
        });
    }
    if let Some(((row, col), _)) = rows.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(ProbeError::NonFinite { row, col });
    }
    Ok(())
}

/// Fits scaler and logistic weights on training fingerprints.
pub fn fit_probe(rows: ArrayView2<'_, f64>, labels: &[Label], config: &ProbeConfig) -> Result<ProbeFit, ProbeError> {
    config.validate()?;
    check_rows(&rows, labels)?;
    let weights = class_weights(labels, config.class_balanced)?;
    let scaler = fit_scaler(rows, "train")?;
    let standardized: Array2<f64> = apply_scaler_rows(rows, &scaler)?;
    let objective = LogisticObjective::new(standardized.view(), labels, weights, config.c_value);
    let scale = 1.0 / (config.c_value * objective.total_weight());

    let opts = LbfgsOptions {
        memory: config.memory,
        max_iter: config.max_iter,
        gtol: config.tolerance,
        ..Default::default()
    };
    let result = minimize(
        |theta| {
            let (v, mut g) = objective.value_grad(theta);
            g.iter_mut().for_each(|gi| *gi *= scale);
            (v * scale, g)
        },
        vec![0.0; objective.n_params()],
        &opts,
    );

    let m = rows.ncols();
    let model = ProbeModel {
        weights: result.x[..m].to_vec(),
        bias: result.x[m],
        scaler,
        config: config.clone(),
        class_weights: weights,
        variant: None,
        region_set: None,
        iterations: result.iterations as u32,
        converged: result.stop.converged(),
    };
    Ok(ProbeFit {
        model,
        report: FitReport {
            iterations: result.iterations,
            stop: result.stop,
            loss_history: result.history.iter().map(|v| v / scale).collect(),
            grad_inf_norm: result.grad_inf_norm / scale,
        },
    })
}

impl ProbeModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, found: usize) -> Result<(), ProbeError> {
        if found != self.dim() {
            return Err(ProbeError::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    /// Log-odds `wᵀ·scale(row) + b`.
    pub fn decision(&self, row: ArrayView1<'_, f64>) -> Result<f64, ProbeError> {
        self.check_dim(row.len())?;
        let x = apply_scaler(row, &self.scaler)?;
        Ok(x.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() + self.bias)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new(&MODEL_MAGIC, MODEL_VERSION);
        w.u32(self.dim() as u32);
        w.f64s(&self.weights);
        w.f64(self.bias);
        w.f64s(&self.scaler.mean);
        w.f64s(&self.scaler.scale);
        w.str(&self.scaler.fitted_on);
        w.f64(self.config.c_value);
        w.u32(self.config.max_iter as u32);
        w.u64(self.config.seed);
        w.f64(self.config.tolerance);
        w.u8(self.config.class_balanced as u8);
        w.u32(self.config.memory as u32);
        w.f64s(&self.class_weights);
        w.u8(self.variant.map_or(u8::MAX, VariantId::id));
        w.u8(self.region_set.as_ref().map_or(0, RegionSet::id));
        w.u32(self.iterations);
        w.u8(self.converged as u8);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let invalid = |e: &dyn std::fmt::Display| FormatError::Invalid(e.to_string());
        let mut r = ByteReader::open(bytes, &MODEL_MAGIC, "DCLM", MODEL_VERSION)?;
        let m = r.u32("M")? as usize;
        let weights = r.f64s(m, "weights")?;
        let bias = r.f64("bias")?;
        let scaler = ScalerStats {
            mean: r.f64s(m, "scaler mean")?,
            scale: r.f64s(m, "scaler scale")?,
            fitted_on: r.str("scaler split")?,
        };
        let config = ProbeConfig {
            c_value: r.f64("C")?,
            max_iter: r.u32("max_iter")? as usize,
            seed: r.u64("seed")?,
            tolerance: r.f64("tolerance")?,
            class_balanced: r.u8("class_balanced")? != 0,
            memory: r.u32("memory")? as usize,
        };
        let cw = r.f64s(2, "class weights")?;
        let variant = match r.u8("variant")? {
            u8::MAX => None,
            id => Some(VariantId::from_id(id).map_err(|e| invalid(&e))?),
        };
        let region_set = match r.u8("region set")? {
            0 => None,
            id => Some(RegionSet::from_id(id).map_err(|e| invalid(&e))?),
        };
        let iterations = r.u32("iterations")?;
        let converged = r.u8("converged")? != 0;
        r.finish()?;
        if !weights.iter().chain([&bias]).all(|v| v.is_finite()) {
            return Err(FormatError::Invalid("non-finite model parameters".into()));
        }
        Ok(ProbeModel {
            weights,
            bias,
            scaler,
            config,
            class_weights: [cw[0], cw[1]],
            variant,
            region_set,
            iterations,
            converged,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ProbeError> {
        fs::write(path, self.to_bytes()).map_err(FormatError::from)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ProbeError> {
        let bytes = fs::read(path).map_err(FormatError::from)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

/// Fake-class probability of one fingerprint row.
pub fn score(model: &ProbeModel, row: ArrayView1<'_, f64>) -> Result<f64, ProbeError> {
    Ok(sigmoid(model.decision(row)?))
}

/// The same probability through `exp(−log(1 + e^{−z}))`.
pub fn score_via_log_odds(model: &ProbeModel, row: ArrayView1<'_, f64>) -> Result<f64, ProbeError> {
    let z = model.decision(row)?;
    Ok((-softplus(-z)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    fn toy() -> (Array2<f64>, Vec<Label>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            xs.push(-1.0);
            ys.push(Label::Real);
            xs.push(1.0);
            ys.push(Label::Fake);
        }
        (Array2::from_shape_vec((100, 1), xs).unwrap(), ys)
    }

    #[test]
    fn separable_toy() {
        let (x, y) = toy();
        let fit = fit_probe(x.view(), &y, &ProbeConfig::default()).unwrap();
        assert!(fit.model.weights[0] > 0.0);
        let correct = x
            .rows()
            .into_iter()
            .zip(&y)
            .filter(|(r, l)| (score(&fit.model, r.view()).unwrap() > 0.5) == (**l == Label::Fake))
            .count();
        assert_eq!(correct, 100);
        assert!(fit.report.stop.converged());
    }

    #[test]
    fn balanced_classes_have_unit_weights() {
        let (_, y) = toy();
        assert_eq!(class_weights(&y, true).unwrap(), [1.0, 1.0]);
        let skewed = [Label::Real, Label::Fake, Label::Fake, Label::Fake];
        assert_eq!(class_weights(&skewed, true).unwrap(), [2.0, 4.0 / 6.0]);
    }

    #[test]
    fn single_class_and_bad_rows() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            fit_probe(x.view(), &[Label::Fake, Label::Fake], &ProbeConfig::default()),
            Err(ProbeError::SingleClass)
        ));
        let bad = array![[1.0], [f64::INFINITY]];
        assert!(matches!(
            fit_probe(bad.view(), &[Label::Real, Label::Fake], &ProbeConfig::default()),
            Err(ProbeError::NonFinite { row: 1, col: 0 })
        ));
        let cfg = ProbeConfig {
            c_value: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            fit_probe(x.view(), &[Label::Real, Label::Fake], &cfg),
            Err(ProbeError::InvalidConfig(_))
        ));
    }

    fn plain_model(weights: Vec<f64>, bias: f64) -> ProbeModel {
        let m = weights.len();
        ProbeModel {
            weights,
            bias,
            scaler: ScalerStats::identity(m),
            config: ProbeConfig::default(),
            class_weights: [1.0, 1.0],
            variant: None,
            region_set: None,
            iterations: 0,
            converged: true,
        }
    }

    #[test]
    fn uninformative_and_saturated_scores() {
        let row = array![3.0, -2.0];
        assert_eq!(score(&plain_model(vec![0.0, 0.0], 0.0), row.view()).unwrap(), 0.5);
        let p = score(&plain_model(vec![0.0, 0.0], 50.0), row.view()).unwrap();
        assert!(p > 1.0 - 1e-15 && p.is_finite());
        let p = score(&plain_model(vec![0.0, 0.0], -800.0), row.view()).unwrap();
        assert!(p >= 0.0 && p.is_finite());
        assert!(matches!(
            score(&plain_model(vec![0.0], 0.0), row.view()),
            Err(ProbeError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn score_two_ways_agree() {
        let m = plain_model(vec![0.7, -1.3, 2.0], -0.4);
        for k in -20..=20 {
            let row = Array1::from(vec![k as f64 * 0.3, 1.0 - k as f64 * 0.1, (k as f64).sin()]);
            let a = score(&m, row.view()).unwrap();
            let b = score_via_log_odds(&m, row.view()).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let (x, y) = toy();
        let mut model = fit_probe(x.view(), &y, &ProbeConfig::default()).unwrap().model;
        model.variant = Some(VariantId::Dca);
        model.region_set = Some(RegionSet::emn());
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..4], b"DCLM");
        assert_eq!(ProbeModel::from_bytes(&bytes).unwrap(), model);
    }
}
