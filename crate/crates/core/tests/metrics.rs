//! ROC-AUC, bootstrap and video-level evaluation against hand-coded oracles.

use std::time::Instant;

mod common;

use common::{pairwise_auc, random_instance, replay_bootstrap, seeded_videos};
use dca::coactivation::{FingerprintRecord, FingerprintSet, VariantId};
use dca::eval::{bootstrap_ci, evaluate_fingerprints, roc_auc, select_frames, BootstrapConfig, EvalError, VideoScore};
use dca::normalize::ScalerStats;
use dca::probe::{ProbeConfig, ProbeModel};
use dca::regions::RegionSet;
use dca::Label;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn roc_auc_equals_pairwise_oracle_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..100 {
        let (scores, labels) = random_instance(&mut rng);
        assert_eq!(roc_auc(&scores, &labels).unwrap(), pairwise_auc(&scores, &labels), "instance {i}");
    }
}

#[test]
fn roc_auc_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (scores, labels) = random_instance(&mut rng);
        let auc = roc_auc(&scores, &labels).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 1.0).collect();
        assert_eq!(roc_auc(&mapped, &labels).unwrap(), auc);
        let flipped: Vec<Label> = labels
            .iter()
            .map(|l| if *l == Label::Fake { Label::Real } else { Label::Fake })
            .collect();
        // Equal up to the rounding of u/(n₁n₀) versus 1 − u'/(n₁n₀).
        assert!((roc_auc(&scores, &flipped).unwrap() - (1.0 - auc)).abs() <= 1e-15);
    }
    assert_eq!(roc_auc(&[0.3; 4], &[Label::Real, Label::Fake, Label::Real, Label::Fake]).unwrap(), 0.5);
    assert!(matches!(roc_auc(&[0.1, 0.2], &[Label::Fake, Label::Fake]), Err(EvalError::SingleClass)));
}

#[test]
fn bootstrap_matches_independent_replay() {
    let videos = seeded_videos(20, 5);
    let ci = bootstrap_ci(&videos, 1000, 42).unwrap();
    let (low, high, redrawn) = replay_bootstrap(&videos, 1000, 42);
    assert_eq!((ci.low, ci.high, ci.n_redrawn), (low, high, redrawn));
    assert!(ci.low <= ci.high);
}

#[test]
fn small_bootstrap_counts_redraws() {
    // With 4 videos a single-class draw has probability 2·(1/2)^4, so redraws happen.
    let videos = seeded_videos(4, 1);
    let ci = bootstrap_ci(&videos, 1000, 42).unwrap();
    let (low, high, redrawn) = replay_bootstrap(&videos, 1000, 42);
    assert_eq!((ci.low, ci.high, ci.n_redrawn), (low, high, redrawn));
    assert!(ci.n_redrawn > 0);
}

#[test]
fn bootstrap_is_deterministic_and_fast() {
    let videos = seeded_videos(400, 11);
    let start = Instant::now();
    let a = bootstrap_ci(&videos, 1000, 42).unwrap();
    let b = bootstrap_ci(&videos, 1000, 42).unwrap();
    assert_eq!(a, b);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let c = bootstrap_ci(&videos, 1000, 43).unwrap();
    assert_ne!((a.low, a.high), (c.low, c.high));
}

#[test]
fn perfect_separation_gives_degenerate_interval() {
    let videos: Vec<VideoScore> = (0..6)
        .map(|i| {
            let fake = i >= 3;
            VideoScore::new(format!("v{i}"), if fake { Label::Fake } else { Label::Real }, vec![if fake { 1.0 } else { 0.0 }])
                .unwrap()
        })
        .collect();
    let ci = bootstrap_ci(&videos, 1000, 42).unwrap();
    assert_eq!((ci.low, ci.high), (1.0, 1.0));
}

#[test]
fn frame_selection_matches_closed_form() {
    assert_eq!(select_frames(15, 15).unwrap(), (0..15).collect::<Vec<_>>());
    assert_eq!(select_frames(1, 15).unwrap(), vec![0]);
    let want: Vec<usize> = (0..15).map(|i| (i as f64 * 28.0 / 14.0).round_ties_even() as usize).collect();
    assert_eq!(select_frames(29, 15).unwrap(), want);
    for total in 1..200 {
        let got = select_frames(total, 15).unwrap();
        let mut want: Vec<usize> = (0..15)
            .map(|i| (i as f64 * (total - 1) as f64 / 14.0).round_ties_even() as usize)
            .collect();
        want.dedup();
        assert_eq!(got, want, "total {total}");
    }
    assert!(select_frames(0, 15).is_err());
}

fn hand_model(weights: Vec<f64>, bias: f64) -> ProbeModel {
    let m = weights.len();
    ProbeModel {
        weights,
        bias,
        scaler: ScalerStats {
            mean: vec![1.0; m],
            scale: vec![2.0; m],
            fitted_on: "train".into(),
        },
        config: ProbeConfig::default(),
        class_weights: [1.0, 1.0],
        variant: Some(VariantId::Dca),
        region_set: Some(RegionSet::eyes_mouth()),
        iterations: 0,
        converged: true,
    }
}

fn hand_set() -> FingerprintSet {
    let mut set = FingerprintSet::new(VariantId::Dca, RegionSet::eyes_mouth(), 2);
    let rows: [(&str, Label, [f32; 2]); 7] = [
        ("a", Label::Real, [1.0, 1.0]),
        ("a", Label::Real, [3.0, 1.0]),
        ("b", Label::Real, [5.0, -1.0]),
        ("c", Label::Fake, [3.0, 3.0]),
        ("c", Label::Fake, [7.0, 1.0]),
        ("c", Label::Fake, [1.0, 5.0]),
        ("d", Label::Fake, [-1.0, 1.0]),
    ];
    for (i, (id, label, values)) in rows.into_iter().enumerate() {
        set.records.push(FingerprintRecord {
            video_id: id.into(),
            frame_index: i as u32,
            label,
            values: values.to_vec(),
        });
    }
    set
}

#[test]
fn end_to_end_micro_oracle() {
    // z = 0.5·(x0−1)/2 + 1.0·(x1−1)/2 − 0.25, score = 1/(1+e^−z)
    let model = hand_model(vec![0.5, 1.0], -0.25);
    let report = evaluate_fingerprints(&model, &hand_set(), BootstrapConfig::default()).unwrap();
    let p = |x0: f64, x1: f64| 1.0 / (1.0 + (-(0.25 * (x0 - 1.0) + 0.5 * (x1 - 1.0) - 0.25)).exp());
    let pooled = [
        ("a", (p(1.0, 1.0) + p(3.0, 1.0)) / 2.0),
        ("b", p(5.0, -1.0)),
        ("c", (p(3.0, 3.0) + p(7.0, 1.0) + p(1.0, 5.0)) / 3.0),
        ("d", p(-1.0, 1.0)),
    ];
    assert_eq!(report.videos.len(), 4);
    for (v, (id, want)) in report.videos.iter().zip(pooled) {
        assert_eq!(v.video_id, id);
        assert!((v.pooled - want).abs() < 1e-15, "{id}: {} vs {want}", v.pooled);
    }
    // a ≈ 0.41, b ≈ 0.44, c ≈ 0.79, d ≈ 0.26: fake c beats both reals, fake d beats neither.
    assert_eq!(report.auc, 0.5);
    let ci = bootstrap_ci(&report.videos, 1000, 42).unwrap();
    assert_eq!((report.ci_low, report.ci_high), (ci.low, ci.high));
    assert_eq!(report.variant, "dca");
    assert_eq!(report.region_set, "em");
}

#[test]
fn zero_weights_tie_every_video() {
    let model = hand_model(vec![0.0, 0.0], 0.7);
    let report = evaluate_fingerprints(&model, &hand_set(), BootstrapConfig::default()).unwrap();
    assert_eq!(report.auc, 0.5);
    assert!(report.videos.iter().all(|v| v.pooled == report.videos[0].pooled));
}

#[test]
fn dimension_mismatch_names_both_sizes() {
    let model = hand_model(vec![0.1, 0.2, 0.3], 0.0);
    let err = evaluate_fingerprints(&model, &hand_set(), BootstrapConfig::default()).unwrap_err();
    assert!(matches!(err, EvalError::DimensionMismatch { model: 3, data: 2 }));
    let msg = err.to_string();
    assert!(msg.contains('3') && msg.contains('2'), "{msg}");
}
