//! Independent oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use dca::container::{encode, ContainerHeader, RegionCode, TokenGrid};
use dca::eval::VideoScore;
use dca::normalize::{apply_scaler_rows, fit_scaler};
use dca::Label;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const TOL: f64 = 1e-10;
const EPS: f64 = 1e-12;

pub type M = Vec<Vec<f64>>;

pub fn to_array(m: &M) -> Array2<f64> {
    let (k, d) = (m.len(), m[0].len());
    Array2::from_shape_fn((k, d), |(i, j)| m[i][j])
}

pub fn ratio(num: f64, den: f64) -> f64 {
    if den < EPS {
        0.0
    } else {
        num / den
    }
}

pub fn col_means(m: &M) -> Vec<f64> {
    let k = m.len() as f64;
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j]).sum::<f64>() / k).collect()
}

pub fn centered(m: &M) -> M {
    let mu = col_means(m);
    m.iter().map(|r| r.iter().zip(&mu).map(|(x, u)| x - u).collect()).collect()
}

/// `aᵀb` as a dense D×D matrix.
pub fn cross(a: &M, b: &M) -> M {
    let d = a[0].len();
    let mut c = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..a.len() {
                c[i][j] += a[k][i] * b[k][j];
            }
        }
    }
    c
}

pub fn frob(m: &M) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn oracle_dca(a: &M, b: &M) -> Vec<f64> {
    let c = cross(a, b);
    (0..c.len()).map(|d| c[d][d] / a.len() as f64).collect()
}

pub fn oracle_cosine_dim(a: &M, b: &M) -> Vec<f64> {
    (0..a[0].len())
        .map(|d| {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for k in 0..a.len() {
                dot += a[k][d] * b[k][d];
                na += a[k][d] * a[k][d];
                nb += b[k][d] * b[k][d];
            }
            if na.sqrt() < EPS || nb.sqrt() < EPS {
                0.0
            } else {
                dot / (na.sqrt() * nb.sqrt())
            }
        })
        .collect()
}

pub fn oracle_cross_covariance(a: &M, b: &M) -> Vec<f64> {
    let (ma, mb) = (col_means(a), col_means(b));
    (0..a[0].len())
        .map(|d| (0..a.len()).map(|k| (a[k][d] - ma[d]) * (b[k][d] - mb[d])).sum::<f64>() / a.len() as f64)
        .collect()
}

pub fn unit_columns(m: &M) -> M {
    let mut m = centered(m);
    for j in 0..m[0].len() {
        let n = m.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
        for r in m.iter_mut() {
            r[j] = if n < EPS { 0.0 } else { r[j] / n };
        }
    }
    m
}

pub fn oracle_pnka_dim(a: &M, b: &M) -> Vec<f64> {
    let c = cross(&unit_columns(a), &unit_columns(b));
    let d = c.len();
    (0..d)
        .map(|i| {
            let row: f64 = (0..d).map(|j| c[i][j]).sum();
            let col: f64 = (0..d).map(|j| c[j][i]).sum();
            0.5 * (row + col)
        })
        .collect()
}

pub fn oracle_gram_frobenius(a: &M, b: &M) -> f64 {
    frob(&cross(a, b)) / a.len() as f64
}

pub fn oracle_cos_region_means(a: &M, b: &M) -> f64 {
    let (ma, mb) = (col_means(a), col_means(b));
    let dot: f64 = ma.iter().zip(&mb).map(|(x, y)| x * y).sum();
    let na = ma.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = mb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < EPS || nb < EPS {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn oracle_mean_dca(a: &M, b: &M) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        for d in 0..a[0].len() {
            s += a[k][d] * b[k][d];
        }
    }
    s / (a.len() * a[0].len()) as f64
}

pub fn oracle_patch_cka(a: &M, b: &M) -> f64 {
    let (ca, cb) = (centered(a), centered(b));
    let num = frob(&cross(&ca, &cb)).powi(2);
    ratio(num, frob(&cross(&ca, &ca)) * frob(&cross(&cb, &cb)))
}

pub fn row_cos(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
    if nx < EPS || ny < EPS {
        0.0
    } else {
        dot / (nx * ny)
    }
}

pub fn oracle_nn_cosine(a: &M, b: &M) -> f64 {
    let directed = |p: &M, q: &M| {
        p.iter()
            .map(|r| q.iter().map(|s| row_cos(r, s)).fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / p.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}

/// Seeded instance; every fifth one carries constant or zero columns to hit
/// the degenerate-denominator convention.
pub fn instance(rng: &mut ChaCha8Rng, i: usize) -> (M, M) {
    let k = rng.random_range(2..=8);
    let d = rng.random_range(1..=16);
    let scale = rng.random_range(0.1..3.0);
    let shift = rng.random_range(-2.0..2.0);
    let mut draw = |_| -> M {
        (0..k)
            .map(|_| (0..d).map(|_| shift + scale * rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let (mut a, mut b) = (draw(0), draw(1));
    if i % 5 == 0 {
        let j = i % d;
        for r in a.iter_mut() {
            r[j] = 1.5;
        }
        for r in b.iter_mut() {
            r[(j + 1) % d] = 0.0;
        }
    }
    if i % 17 == 0 {
        b = vec![vec![0.0; d]; k];
    }
    (a, b)
}

/// `P(fake > real) + 0.5·P(tie)` by comparing every pair.
pub fn pairwise_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut twice_u, mut pairs) = (0u64, 0u64);
    for (i, li) in labels.iter().enumerate() {
        if *li != Label::Fake {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if *lj != Label::Real {
                continue;
            }
            pairs += 1;
            twice_u += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    (twice_u as f64 / 2.0) / pairs as f64
}

/// Independent bootstrap: same RNG stream, pairwise AUC, redraw single-class draws.
pub fn replay_bootstrap(videos: &[VideoScore], n: usize, seed: u64) -> (f64, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut aucs = Vec::new();
    let mut redrawn = 0;
    while aucs.len() < n {
        let picks: Vec<&VideoScore> = (0..videos.len())
            .map(|_| &videos[rng.random_range(0..videos.len() as u64) as usize])
            .collect();
        let labels: Vec<Label> = picks.iter().map(|v| v.label).collect();
        if labels.iter().all(|l| *l == labels[0]) {
            redrawn += 1;
            continue;
        }
        let scores: Vec<f64> = picks.iter().map(|v| v.pooled).collect();
        aucs.push(pairwise_auc(&scores, &labels));
    }
    aucs.sort_by(f64::total_cmp);
    let pct = |q: f64| {
        let pos = q * (aucs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        aucs[lo] + (aucs[hi] - aucs[lo]) * (pos - lo as f64)
    };
    (pct(0.025), pct(0.975), redrawn)
}

pub fn random_f32(rng: &mut ChaCha8Rng) -> f32 {
    match rng.random_range(0..10) {
        0 => -0.0,
        1 => f32::MIN_POSITIVE / 8.0,
        2 => f32::MAX,
        3 => -f32::MIN_POSITIVE,
        _ => loop {
            let v = f32::from_bits(rng.random());
            if v.is_finite() {
                break v;
            }
        },
    }
}

pub fn random_container(rng: &mut ChaCha8Rng) -> (ContainerHeader, Vec<TokenGrid<f32>>) {
    let (h, w, d) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=8));
    let n = rng.random_range(0..=4);
    let tag: String = (0..rng.random_range(0..12))
        .map(|_| ['a', 'Z', '/', '-', 'é', '9', 'λ'][rng.random_range(0..7)])
        .collect();
    let header = ContainerHeader::new(h, w, d, n, tag);
    let patches = (h * w) as usize;
    let frames = (0..n)
        .map(|f| TokenGrid {
            frame_index: f,
            grid_h: h,
            grid_w: w,
            tokens: Array2::from_shape_fn((patches, d as usize), |_| random_f32(rng)),
            labels: (0..patches)
                .map(|_| RegionCode::from_u8(rng.random_range(0..=5)).unwrap())
                .collect(),
        })
        .collect();
    (header, frames)
}

pub fn bits(frames: &[TokenGrid<f32>]) -> Vec<Vec<u32>> {
    frames.iter().map(|f| f.tokens.iter().map(|v| v.to_bits()).collect()).collect()
}

pub fn sample_bytes() -> Vec<u8> {
    let header = ContainerHeader::new(2, 2, 3, 2, "tag");
    let frames: Vec<_> = (0..2)
        .map(|f| {
            let mut g = TokenGrid::zeros(f, 2, 2, 3);
            g.labels = vec![RegionCode::Eyes, RegionCode::Mouth, RegionCode::Nose, RegionCode::Skin];
            g
        })
        .collect();
    encode(&header, &frames).unwrap()
}

/// 200 × 10 rows; the first three dimensions carry signal, classes 130/70.
pub fn seeded_data(seed: u64) -> (Array2<f64>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Array2::zeros((200, 10));
    let mut labels = Vec::new();
    for i in 0..200 {
        let fake = i % 20 < 7;
        labels.push(if fake { Label::Fake } else { Label::Real });
        for j in 0..10 {
            let signal = if j < 3 && fake { 0.8 } else { 0.0 };
            x[[i, j]] = 2.0 * j as f64 + (1.0 + j as f64 * 0.3) * noise.sample(&mut rng) + signal;
        }
    }
    (x, labels)
}

pub fn standardized(x: &Array2<f64>) -> Array2<f64> {
    apply_scaler_rows(x.view(), &fit_scaler(x.view(), "train").unwrap()).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Label>) {
    let n = rng.random_range(2..60);
    let levels = rng.random_range(1..8);
    let mut labels: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.4) { Label::Fake } else { Label::Real }).collect();
    labels[0] = Label::Fake;
    labels[1] = Label::Real;
    let scores = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
    (scores, labels)
}

pub fn seeded_videos(n: usize, seed: u64) -> Vec<VideoScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
            let shift = if label == Label::Fake { 0.15 } else { 0.0 };
            let frames = (0..rng.random_range(1..6)).map(|_| rng.random_range(0.0..0.85) + shift).collect();
            VideoScore::new(format!("v{i}"), label, frames).unwrap()
        })
        .collect()
}

/// One row of two patches per anatomical region plus a background row.
pub fn full_face(d: usize) -> TokenGrid<f64> {
    let mut labels = Vec::new();
    for r in RegionCode::ANATOMICAL.into_iter().chain([RegionCode::Background]) {
        labels.extend([r, r]);
    }
    TokenGrid {
        frame_index: 0,
        grid_h: 6,
        grid_w: 2,
        tokens: Array2::from_shape_fn((12, d), |(p, j)| ((p * 31 + j * 7) % 13) as f64 / 13.0 - 0.5),
        labels,
    }
}
