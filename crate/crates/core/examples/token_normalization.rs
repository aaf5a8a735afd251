// Fit per-dimension token statistics on training frames and apply them.
//
// ```bash
// cargo run -p dca-core --example token_normalization
// ```

use dca::container::TokenGrid;
use dca::normalize::{apply_norm, fit_norm_stats, NormStats, Welford, DEFAULT_EPSILON};

fn frame(index: u32, offset: f32) -> TokenGrid<f32> {
    let mut g = TokenGrid::zeros(index, 2, 2, 3);
    for (i, v) in g.tokens.iter_mut().enumerate() {
        *v = offset + (i % 3) as f32 * 10.0 + (i / 3) as f32;
    }
    g
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let train = vec![frame(0, 0.0), frame(1, 2.0)];
    let stats = fit_norm_stats(&train, "train")?;
    println!("mean {:?}\nstd  {:?}", stats.mean, stats.std);

    // Streaming accumulation over chunks gives the same statistics.
    let mut a = Welford::new(3);
    a.push_grid(&train[0])?;
    let mut b = Welford::new(3);
    b.push_grid(&train[1])?;
    a.merge(&b);
    let merged = a.finish(DEFAULT_EPSILON, "train")?;
    assert!(merged.mean.iter().zip(&stats.mean).all(|(x, y)| (x - y).abs() < 1e-12));

    // Held-out frames reuse the training statistics unchanged.
    let normalized = apply_norm(&frame(0, 5.0), &stats)?;
    println!("normalized eval frame:\n{:.3}", normalized.tokens);

    let restored = NormStats::from_bytes(&stats.to_bytes())?;
    assert_eq!(restored, stats);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
