//! End-to-end composition: stats → fingerprints → probe → video evaluation.
//!
//! Fitting steps (token statistics, probe training) only accept videos
//! tagged with the training split; anything else is a protocol violation.

use std::fmt::Write as _;

use thiserror::Error;

use crate::coactivation::{fingerprint_raw, CoactivationError, FingerprintSet, FrameOutcome, VariantId};
use crate::eval::{report_from_videos, score_videos, select_frames, BootstrapConfig, EvalError, EvalReport, SkippedFrame, SkippedVideo, DEFAULT_FRAMES};
use crate::manifest::{ManifestError, SplitView, VideoSource, TRAIN_SPLIT};
use crate::normalize::{NormStats, NormalizeError, Welford, DEFAULT_EPSILON};
use crate::probe::{fit_probe, ProbeConfig, ProbeError, ProbeFit};
use crate::regions::SamplingPolicy;
use crate::FormatError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Coactivation(#[from] CoactivationError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("feature dim mismatch: video {video_id} has D={found}, expected D={expected}")]
    FeatureDim {
        video_id: String,
        expected: usize,
        found: usize,
    },
    #[error("empty manifest")]
    EmptyManifest,
}

fn require_train_split(source: &(impl VideoSource + ?Sized), what: &str) -> Result<(), PipelineError> {
    if let Some(m) = source.metas().iter().find(|m| m.split != TRAIN_SPLIT) {
        return Err(PipelineError::Protocol(format!(
            "{what} may only use the {TRAIN_SPLIT:?} split; video {} is tagged {:?}",
            m.video_id, m.split
        )));
    }
    Ok(())
}

/// Fits token statistics over every frame of a training-split source.
pub fn fit_stats(source: &(impl VideoSource + ?Sized)) -> Result<NormStats, PipelineError> {
    if source.is_empty() {
        return Err(PipelineError::EmptyManifest);
    }
    require_train_split(source, "token statistics")?;
    let mut acc: Option<Welford> = None;
    for i in 0..source.len() {
        let (header, frames) = source.load(i)?;
        let acc = acc.get_or_insert_with(|| Welford::new(header.feature_dim as usize));
        for frame in &frames {
            acc.push_grid(frame)?;
        }
    }
    Ok(acc.expect("non-empty").finish(DEFAULT_EPSILON, TRAIN_SPLIT)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FingerprintConfig {
    pub policy: SamplingPolicy,
    pub variant: VariantId,
    /// Evenly spaced frames used per video.
    pub n_frames: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig {
            policy: SamplingPolicy::default(),
            variant: VariantId::Dca,
            n_frames: DEFAULT_FRAMES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintRun {
    pub set: FingerprintSet,
    pub skipped_frames: Vec<SkippedFrame>,
    pub skipped_videos: Vec<SkippedVideo>,
    pub source_tag: String,
}

/// Fingerprints the selected frames of every video in the source.
pub fn fingerprint_source(
    source: &(impl VideoSource + ?Sized),
    stats: &NormStats,
    config: &FingerprintConfig,
) -> Result<FingerprintRun, PipelineError> {
    if source.is_empty() {
        return Err(PipelineError::EmptyManifest);
    }
    let pairs = config.policy.region_set.pairs().len();
    let dim = stats.dim();
    let mut run = FingerprintRun {
        set: FingerprintSet::new(
            config.variant,
            config.policy.region_set.clone(),
            pairs * config.variant.pair_len(dim),
        ),
        skipped_frames: Vec::new(),
        skipped_videos: Vec::new(),
        source_tag: String::new(),
    };
    for (i, meta) in source.metas().into_iter().enumerate() {
        let (header, frames) = source.load(i)?;
        if header.feature_dim as usize != dim {
            return Err(PipelineError::FeatureDim {
                video_id: meta.video_id,
                expected: dim,
                found: header.feature_dim as usize,
            });
        }
        if run.source_tag.is_empty() {
            run.source_tag = header.source_tag.clone();
        }
        if frames.is_empty() {
            run.skipped_videos.push(SkippedVideo {
                video_id: meta.video_id,
                reason: "container has no frames".into(),
            });
            continue;
        }
        let mut used = 0;
        for idx in select_frames(frames.len(), config.n_frames)? {
            match fingerprint_raw(&frames[idx], stats, &meta.video_id, &config.policy, config.variant)? {
                FrameOutcome::Fingerprint(fp) => {
                    run.set.push(&fp, meta.label)?;
                    used += 1;
                }
                FrameOutcome::Skipped { frame_index, missing } => run.skipped_frames.push(SkippedFrame {
                    video_id: meta.video_id.clone(),
                    frame_index,
                    missing,
                }),
            }
        }
        if used == 0 {
            run.skipped_videos.push(SkippedVideo {
                video_id: meta.video_id,
                reason: "no frame contains every region of the set".into(),
            });
        }
    }
    Ok(run)
}

/// Trains the probe and stamps it with the fingerprint provenance.
pub fn train(set: &FingerprintSet, config: &ProbeConfig) -> Result<ProbeFit, PipelineError> {
    let x = set.matrix();
    let mut fit = fit_probe(x.view(), &set.labels(), config)?;
    fit.model.variant = Some(set.variant);
    fit.model.region_set = Some(set.region_set.clone());
    Ok(fit)
}

/// Fingerprints a training-split source and trains on it.
pub fn train_from_source(
    source: &(impl VideoSource + ?Sized),
    stats: &NormStats,
    fingerprint: &FingerprintConfig,
    probe: &ProbeConfig,
) -> Result<(FingerprintRun, ProbeFit), PipelineError> {
    require_train_split(source, "probe training")?;
    let run = fingerprint_source(source, stats, fingerprint)?;
    let fit = train(&run.set, probe)?;
    Ok((run, fit))
}

/// Scores an already fingerprinted evaluation set, carrying skip lists into the report.
pub fn evaluate_run(
    model: &crate::probe::ProbeModel,
    run: &FingerprintRun,
    bootstrap: BootstrapConfig,
) -> Result<EvalReport, PipelineError> {
    if run.set.is_empty() {
        return Err(EvalError::AllSkipped.into());
    }
    let videos = score_videos(model, &run.set)?;
    let mut report = report_from_videos(
        videos,
        bootstrap,
        run.set.variant.name(),
        &run.set.region_set.name(),
        &run.source_tag,
    )?;
    report.skipped_videos = run.skipped_videos.clone();
    report.skipped_frames = run.skipped_frames.clone();
    Ok(report)
}

/// Select → fingerprint → score → pool over a source, then AUC and CI.
pub fn evaluate(
    model: &crate::probe::ProbeModel,
    source: &(impl VideoSource + ?Sized),
    stats: &NormStats,
    fingerprint: &FingerprintConfig,
    bootstrap: BootstrapConfig,
) -> Result<EvalReport, PipelineError> {
    let run = fingerprint_source(source, stats, fingerprint)?;
    evaluate_run(model, &run, bootstrap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: VariantId,
    pub dim: usize,
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_videos: usize,
    pub converged: bool,
}

/// Trains and evaluates one probe per variant on the same train/eval split.
///
/// `source` must carry both `train` videos and evaluation videos (any other
/// split tag). Token statistics come from `stats` when given, otherwise they
/// are fitted on the training videos.
pub fn ablate(
    source: &(impl VideoSource + ?Sized),
    stats: Option<&NormStats>,
    base: &FingerprintConfig,
    probe: &ProbeConfig,
    bootstrap: BootstrapConfig,
    variants: &[VariantId],
) -> Result<Vec<AblationRow>, PipelineError> {
    let train_view = SplitView::new(source, TRAIN_SPLIT);
    let eval_indices: Vec<String> = source
        .metas()
        .into_iter()
        .map(|m| m.split)
        .filter(|s| s != TRAIN_SPLIT)
        .collect();
    let Some(eval_split) = eval_indices.first().cloned() else {
        return Err(PipelineError::Protocol("ablation needs evaluation videos besides the train split".into()));
    };
    if eval_indices.iter().any(|s| *s != eval_split) {
        return Err(PipelineError::Protocol("ablation expects a single evaluation split".into()));
    }
    let eval_view = SplitView::new(source, &eval_split);
    let fitted;
    let stats = match stats {
        Some(s) => s,
        None => {
            fitted = fit_stats(&train_view)?;
            &fitted
        }
    };

    let mut rows = Vec::with_capacity(variants.len());
    for &variant in variants {
        let cfg = FingerprintConfig {
            variant,
            ..base.clone()
        };
        let (_, fit) = train_from_source(&train_view, stats, &cfg, probe)?;
        let report = evaluate(&fit.model, &eval_view, stats, &cfg, bootstrap)?;
        rows.push(AblationRow {
            variant,
            dim: fit.model.dim(),
            auc: report.auc,
            ci_low: report.ci_low,
            ci_high: report.ci_high,
            n_videos: report.videos.len(),
            converged: fit.model.converged,
        });
    }
    Ok(rows)
}

pub fn format_ablation_table(rows: &[AblationRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<18} {:>7} {:>8} {:>18} {:>8}", "variant", "M", "AUC", "95% CI", "videos");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<18} {:>7} {:>8.4} {:>18} {:>8}{}",
            r.variant.name(),
            r.dim,
            r.auc,
            format!("[{:.4}, {:.4}]", r.ci_low, r.ci_high),
            r.n_videos,
            if r.converged { "" } else { "  (not converged)" }
        );
    }
    s
}
