//! Synthetic region-token datasets with a known answer.
//!
//! Class information lives only in per-dimension region means. A coherent
//! (real) video draws one mean vector `μ ∈ {±m}^D` shared by every region; an
//! incoherent (fake) video gives each region its own means. Tokens are
//! `μ_region + N(0, s²)` per patch and frame. Within-sample centering removes
//! `μ` and with it the whole class signal.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::container::{write_container, ContainerError, ContainerHeader, RegionCode, TokenGrid};
use crate::manifest::{Manifest, ManifestEntry, ManifestError, VideoMeta, VideoSource, TRAIN_SPLIT};
use crate::regions::RegionSet;
use crate::Label;

pub const EVAL_SPLIT: &str = "eval";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncoherenceMode {
    /// Every region of a fake video draws independent means.
    IndependentMeans,
    /// Regions after the first copy the first region's means with a random
    /// `flip_fraction` of dimensions sign-flipped.
    SignFlippedMeans,
}

impl IncoherenceMode {
    pub fn name(self) -> &'static str {
        match self {
            IncoherenceMode::IndependentMeans => "independent_means",
            IncoherenceMode::SignFlippedMeans => "sign_flipped_means",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "independent_means" => Some(IncoherenceMode::IndependentMeans),
            "sign_flipped_means" => Some(IncoherenceMode::SignFlippedMeans),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub d: usize,
    /// Patches per region in every frame.
    pub k: usize,
    pub n_videos_per_class: usize,
    pub frames_per_video: usize,
    pub mean_scale: f64,
    pub noise_scale: f64,
    pub incoherence: IncoherenceMode,
    pub flip_fraction: f64,
    pub regions: RegionSet,
    /// Leading fraction of each class tagged `train`; the rest is `eval`.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            d: 64,
            k: 20,
            n_videos_per_class: 200,
            frames_per_video: 5,
            mean_scale: 1.0,
            noise_scale: 0.5,
            incoherence: IncoherenceMode::IndependentMeans,
            flip_fraction: 0.5,
            regions: RegionSet::emn(),
            train_fraction: 0.5,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d == 0 || self.k == 0 || self.frames_per_video == 0 {
            return Err("d, k and frames_per_video must be >= 1".into());
        }
        if !(self.mean_scale >= 0.0 && self.noise_scale >= 0.0) {
            return Err("mean and noise scales must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) || !(0.0..=1.0).contains(&self.train_fraction) {
            return Err("fractions must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub meta: VideoMeta,
    /// Region means used to generate tokens, in region-set order.
    pub region_means: Vec<Vec<f64>>,
    pub header: ContainerHeader,
    pub frames: Vec<TokenGrid<f32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub config: SyntheticConfig,
    pub videos: Vec<SyntheticVideo>,
}

impl VideoSource for SyntheticDataset {
    fn metas(&self) -> Vec<VideoMeta> {
        self.videos.iter().map(|v| v.meta.clone()).collect()
    }

    fn load(&self, index: usize) -> Result<(ContainerHeader, Vec<TokenGrid<f32>>), ManifestError> {
        let v = &self.videos[index];
        Ok((v.header.clone(), v.frames.clone()))
    }

    fn len(&self) -> usize {
        self.videos.len()
    }
}

fn random_signs(rng: &mut ChaCha8Rng, d: usize, m: f64) -> Vec<f64> {
    (0..d).map(|_| if rng.random_bool(0.5) { m } else { -m }).collect()
}

fn region_means(config: &SyntheticConfig, label: Label, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = config.regions.regions().len();
    let (d, m) = (config.d, config.mean_scale);
    match label {
        Label::Fake => match config.incoherence {
            IncoherenceMode::IndependentMeans => (0..n).map(|_| random_signs(rng, d, m)).collect(),
            IncoherenceMode::SignFlippedMeans => {
                let base = random_signs(rng, d, m);
                let mut out = vec![base.clone()];
                for _ in 1..n {
                    out.push(
                        base.iter()
                            .map(|&v| if rng.random_bool(config.flip_fraction) { -v } else { v })
                            .collect(),
                    );
                }
                out
            }
        },
        _ => {
            let shared = random_signs(rng, d, m);
            vec![shared; n]
        }
    }
}

/// Grid layout: one row of `k` patches per region, plus a background row.
fn build_frame(
    config: &SyntheticConfig,
    frame_index: u32,
    means: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> TokenGrid<f32> {
    let regions = config.regions.regions();
    let rows = regions.len() + 1;
    let patches = rows * config.k;
    let noise = Normal::new(0.0, config.noise_scale).expect("validated");
    let mut labels = Vec::with_capacity(patches);
    let mut tokens = Array2::<f32>::zeros((patches, config.d));
    for p in 0..patches {
        let row = p / config.k;
        let (label, mean) = match regions.get(row) {
            Some(&r) => (r, Some(&means[row])),
            None => (RegionCode::Background, None),
        };
        labels.push(label);
        for j in 0..config.d {
            let mu = mean.map_or(0.0, |m| m[j]);
            tokens[[p, j]] = (mu + noise.sample(rng)) as f32;
        }
    }
    TokenGrid {
        frame_index,
        grid_h: rows as u32,
        grid_w: config.k as u32,
        tokens,
        labels,
    }
}

/// Generates the dataset in memory. Deterministic under `config.seed`.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticDataset, String> {
    config.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let n_train = (config.train_fraction * config.n_videos_per_class as f64).round() as usize;
    let mut videos = Vec::with_capacity(2 * config.n_videos_per_class);
    for label in [Label::Real, Label::Fake] {
        for v in 0..config.n_videos_per_class {
            let mut rng = ChaCha8Rng::seed_from_u64(master.random());
            let means = region_means(config, label, &mut rng);
            let frames: Vec<_> = (0..config.frames_per_video)
                .map(|f| build_frame(config, f as u32, &means, &mut rng))
                .collect();
            let header = ContainerHeader::new(
                frames[0].grid_h,
                frames[0].grid_w,
                config.d as u32,
                frames.len() as u32,
                format!("synthetic/d{}/{}", config.d, config.incoherence.name()),
            );
            videos.push(SyntheticVideo {
                meta: VideoMeta {
                    video_id: format!("{}-{v:04}", label.name()),
                    label,
                    split: if v < n_train { TRAIN_SPLIT } else { EVAL_SPLIT }.to_owned(),
                },
                region_means: means,
                header,
                frames,
            });
        }
    }
    Ok(SyntheticDataset {
        config: config.clone(),
        videos,
    })
}

/// Paths of the manifests written by [`SyntheticDataset::write`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenDataset {
    pub all: PathBuf,
    pub train: PathBuf,
    pub eval: PathBuf,
}

impl SyntheticDataset {
    /// Writes `videos/<id>.dcaf` containers plus `manifest.tsv`, `train.tsv`
    /// and `eval.tsv` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<WrittenDataset, ContainerError> {
        let dir = dir.as_ref();
        let videos_dir = dir.join("videos");
        fs::create_dir_all(&videos_dir)?;
        let mut all = Manifest::default();
        for v in &self.videos {
            let path = videos_dir.join(format!("{}.dcaf", v.meta.video_id));
            write_container(&path, &v.header, &v.frames)?;
            all.entries.push(ManifestEntry {
                path,
                meta: v.meta.clone(),
            });
        }
        let subset = |split: &str| Manifest {
            entries: all.entries.iter().filter(|e| e.meta.split == split).cloned().collect(),
        };
        let out = WrittenDataset {
            all: dir.join("manifest.tsv"),
            train: dir.join("train.tsv"),
            eval: dir.join("eval.tsv"),
        };
        let write = |m: &Manifest, p: &Path| fs::write(p, m.to_text(dir));
        write(&all, &out.all)?;
        write(&subset(TRAIN_SPLIT), &out.train)?;
        write(&subset(EVAL_SPLIT), &out.eval)?;
        Ok(out)
    }
}
