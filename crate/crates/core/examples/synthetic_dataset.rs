// Generate a small synthetic dataset on disk and reload it via its manifest.
//
// ```bash
// cargo run -p dca-core --example synthetic_dataset
// ```

use dca::manifest::{Manifest, VideoSource};
use dca::synth::{generate, SyntheticConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = SyntheticConfig {
        d: 8,
        k: 5,
        n_videos_per_class: 4,
        frames_per_video: 2,
        ..SyntheticConfig::default()
    };
    let dataset = generate(&config)?;
    let dir = std::env::temp_dir().join(format!("dca-synth-example-{}", std::process::id()));
    let written = dataset.write(&dir)?;

    let manifest = Manifest::read(&written.all)?;
    for (i, meta) in manifest.metas().iter().enumerate() {
        let (header, frames) = manifest.load(i)?;
        println!(
            "{:<10} {:<4} {:<5} {}x{} D={} frames={}",
            meta.video_id, meta.label, meta.split, header.grid_h, header.grid_w, header.feature_dim,
            frames.len()
        );
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
