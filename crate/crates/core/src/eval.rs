//! Frame selection, video-level pooling, ROC-AUC and percentile bootstrap.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coactivation::FingerprintSet;
use crate::container::RegionCode;
use crate::probe::{score, ProbeError, ProbeModel};
use crate::Label;

pub const DEFAULT_FRAMES: usize = 15;
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("video has no frames")]
    NoFrames,
    #[error("frame count must be at least 1")]
    ZeroCount,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("both real and fake items are required")]
    SingleClass,
    #[error("unlabeled item at position {0}")]
    Unlabeled(usize),
    #[error("bootstrap needs at least 2 videos per class, have {real} real and {fake} fake")]
    TooFewVideos { real: usize, fake: usize },
    #[error("video {0} carries conflicting labels")]
    InconsistentLabel(String),
    #[error("dimension mismatch: model has M={model}, fingerprints have M={data}")]
    DimensionMismatch { model: usize, data: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("every video was skipped")]
    AllSkipped,
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `n` frame indices evenly spaced over `[0, total-1]`.
///
/// Position `i` maps to `i·(total−1)/(n−1)` rounded to nearest with ties to
/// even, computed in exact integer arithmetic. Duplicates (when
/// `total < n`) are dropped with order kept.
pub fn select_frames(total: usize, n: usize) -> Result<Vec<usize>, EvalError> {
    if total == 0 {
        return Err(EvalError::NoFrames);
    }
    if n == 0 {
        return Err(EvalError::ZeroCount);
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    let den = (n - 1) as u128;
    let mut out: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let num = i as u128 * (total - 1) as u128;
        let (q, r) = (num / den, num % den);
        let idx = match (2 * r).cmp(&den) {
            Ordering::Greater => q + 1,
            Ordering::Equal => q + (q & 1),
            Ordering::Less => q,
        } as usize;
        if out.last() != Some(&idx) {
            out.push(idx);
        }
    }
    Ok(out)
}

fn split_counts(labels: &[Label]) -> Result<(usize, usize), EvalError> {
    if let Some(i) = labels.iter().position(|l| *l == Label::Unlabeled) {
        return Err(EvalError::Unlabeled(i));
    }
    let fake = labels.iter().filter(|l| **l == Label::Fake).count();
    Ok((labels.len() - fake, fake))
}

/// Mann–Whitney AUC with fake as the positive class; ties get average ranks.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let (n_real, n_fake) = split_counts(labels)?;
    if n_real == 0 || n_fake == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut fake_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their average
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let fakes_in_group = order[start..end].iter().filter(|&&i| labels[i] == Label::Fake).count();
        fake_rank_sum += avg_rank * fakes_in_group as f64;
        start = end;
    }
    let u = fake_rank_sum - (n_fake * (n_fake + 1)) as f64 / 2.0;
    Ok(u / (n_fake as f64 * n_real as f64))
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoScore {
    pub video_id: String,
    pub label: Label,
    pub frame_scores: Vec<f64>,
    /// Mean of `frame_scores`.
    pub pooled: f64,
    pub n_frames_used: usize,
}

impl VideoScore {
    pub fn new(video_id: impl Into<String>, label: Label, frame_scores: Vec<f64>) -> Result<Self, EvalError> {
        if frame_scores.is_empty() {
            return Err(EvalError::NoFrames);
        }
        // Running mean: exact when every frame carries the same score, so
        // identical videos tie instead of differing in the last ulp.
        let mut pooled = 0.0;
        for (i, s) in frame_scores.iter().enumerate() {
            pooled += (s - pooled) / (i + 1) as f64;
        }
        Ok(VideoScore {
            video_id: video_id.into(),
            label,
            n_frames_used: frame_scores.len(),
            frame_scores,
            pooled,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCi {
    pub low: f64,
    pub high: f64,
    pub n_resamples: usize,
    /// Single-class resamples that were discarded and redrawn.
    pub n_redrawn: usize,
    pub seed: u64,
}

/// Percentile 95% interval of video-level AUC over with-replacement
/// resamples of videos.
pub fn bootstrap_ci(videos: &[VideoScore], n_resamples: usize, seed: u64) -> Result<BootstrapCi, EvalError> {
    let labels: Vec<Label> = videos.iter().map(|v| v.label).collect();
    let scores: Vec<f64> = videos.iter().map(|v| v.pooled).collect();
    let (real, fake) = split_counts(&labels)?;
    if real < 2 || fake < 2 {
        return Err(EvalError::TooFewVideos { real, fake });
    }
    if n_resamples == 0 {
        return Err(EvalError::ZeroCount);
    }
    let n = videos.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut aucs = Vec::with_capacity(n_resamples);
    let mut n_redrawn = 0;
    let mut s = vec![0.0; n];
    let mut l = vec![Label::Real; n];
    while aucs.len() < n_resamples {
        for (si, li) in s.iter_mut().zip(l.iter_mut()) {
            let j = rng.random_range(0..n as u64) as usize;
            *si = scores[j];
            *li = labels[j];
        }
        match roc_auc(&s, &l) {
            Ok(auc) => aucs.push(auc),
            Err(EvalError::SingleClass) => n_redrawn += 1,
            Err(e) => return Err(e),
        }
    }
    aucs.sort_by(f64::total_cmp);
    Ok(BootstrapCi {
        low: percentile(&aucs, 0.025),
        high: percentile(&aucs, 0.975),
        n_resamples,
        n_redrawn,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFrame {
    pub video_id: String,
    pub frame_index: u32,
    pub missing: Vec<RegionCode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedVideo {
    pub video_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
    pub n_redrawn: usize,
    pub bootstrap_seed: u64,
    pub videos: Vec<VideoScore>,
    pub skipped_videos: Vec<SkippedVideo>,
    pub skipped_frames: Vec<SkippedFrame>,
    pub variant: String,
    pub region_set: String,
    pub source_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_resamples: DEFAULT_RESAMPLES,
            seed: DEFAULT_BOOTSTRAP_SEED,
        }
    }
}

/// Scores every frame, mean-pools per video and computes AUC plus CI.
pub fn score_videos(model: &ProbeModel, set: &FingerprintSet) -> Result<Vec<VideoScore>, EvalError> {
    if model.dim() != set.dim {
        return Err(EvalError::DimensionMismatch {
            model: model.dim(),
            data: set.dim,
        });
    }
    // group by video, first-appearance order
    let mut groups: Vec<(String, Label, Vec<f64>)> = Vec::new();
    for rec in &set.records {
        let row = Array1::from_iter(rec.values.iter().map(|&v| f64::from(v)));
        let p = score(model, row.view())?;
        match groups.iter_mut().find(|(id, _, _)| *id == rec.video_id) {
            Some((_, label, scores)) => {
                if *label != rec.label {
                    return Err(EvalError::InconsistentLabel(rec.video_id.clone()));
                }
                scores.push(p);
            }
            None => groups.push((rec.video_id.clone(), rec.label, vec![p])),
        }
    }
    groups
        .into_iter()
        .map(|(id, label, scores)| VideoScore::new(id, label, scores))
        .collect()
}

pub fn evaluate_fingerprints(
    model: &ProbeModel,
    set: &FingerprintSet,
    bootstrap: BootstrapConfig,
) -> Result<EvalReport, EvalError> {
    if set.is_empty() {
        return Err(EvalError::Empty);
    }
    let videos = score_videos(model, set)?;
    report_from_videos(videos, bootstrap, set.variant.name(), &set.region_set.name(), "")
}

pub(crate) fn report_from_videos(
    videos: Vec<VideoScore>,
    bootstrap: BootstrapConfig,
    variant: &str,
    region_set: &str,
    source_tag: &str,
) -> Result<EvalReport, EvalError> {
    let scores: Vec<f64> = videos.iter().map(|v| v.pooled).collect();
    let labels: Vec<Label> = videos.iter().map(|v| v.label).collect();
    let auc = roc_auc(&scores, &labels)?;
    let ci = bootstrap_ci(&videos, bootstrap.n_resamples, bootstrap.seed)?;
    Ok(EvalReport {
        auc,
        ci_low: ci.low,
        ci_high: ci.high,
        n_resamples: ci.n_resamples,
        n_redrawn: ci.n_redrawn,
        bootstrap_seed: ci.seed,
        videos,
        skipped_videos: Vec::new(),
        skipped_frames: Vec::new(),
        variant: variant.into(),
        region_set: region_set.into(),
        source_tag: source_tag.into(),
    })
}

impl EvalReport {
    /// Machine-readable `key=value` summary, one key per line.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "auc={}", self.auc);
        let _ = writeln!(s, "ci_low={}", self.ci_low);
        let _ = writeln!(s, "ci_high={}", self.ci_high);
        let _ = writeln!(s, "n_videos={}", self.videos.len());
        let _ = writeln!(s, "n_skipped={}", self.skipped_videos.len());
        let _ = writeln!(s, "n_skipped_frames={}", self.skipped_frames.len());
        let _ = writeln!(s, "n_resamples={}", self.n_resamples);
        let _ = writeln!(s, "n_redrawn={}", self.n_redrawn);
        let _ = writeln!(s, "seed={}", self.bootstrap_seed);
        let _ = writeln!(s, "variant={}", self.variant);
        let _ = writeln!(s, "region_set={}", self.region_set);
        let _ = writeln!(s, "block_tag={}", self.source_tag);
        s
    }

    /// Human-readable summary plus the per-video table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "variant {}  region set {}  block {}",
            self.variant,
            self.region_set,
            if self.source_tag.is_empty() { "-" } else { &self.source_tag }
        );
        let _ = writeln!(
            s,
            "video AUC {:.4}  95% CI [{:.4}, {:.4}]  ({} resamples, seed {})",
            self.auc, self.ci_low, self.ci_high, self.n_resamples, self.bootstrap_seed
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<32} {:>5} {:>7} {:>10}", "video", "label", "frames", "score");
        for v in &self.videos {
            let _ = writeln!(
                s,
                "{:<32} {:>5} {:>7} {:>10.6}",
                v.video_id,
                v.label.name(),
                v.n_frames_used,
                v.pooled
            );
        }
        for v in &self.skipped_videos {
            let _ = writeln!(s, "skipped video {}: {}", v.video_id, v.reason);
        }
        for f in &self.skipped_frames {
            let missing: Vec<_> = f.missing.iter().map(|r| r.name()).collect();
            let _ = writeln!(
                s,
                "skipped frame {}#{}: missing {}",
                f.video_id,
                f.frame_index,
                missing.join(",")
            );
        }
        s
    }

    /// Writes `<stem>.txt` (table) and `<stem>.kv` (key-value summary).
    pub fn write(&self, stem: impl AsRef<Path>) -> Result<(), EvalError> {
        let stem = stem.as_ref();
        fs::write(stem.with_extension("txt"), self.to_table())?;
        fs::write(stem.with_extension("kv"), self.to_key_values())?;
        Ok(())
    }
}
