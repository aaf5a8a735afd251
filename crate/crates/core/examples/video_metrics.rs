// Frame scores pooled per video, ROC-AUC and a bootstrap interval.
//
// ```bash
// cargo run -p dca-core --example video_metrics
// ```

use dca::eval::{bootstrap_ci, roc_auc, select_frames, VideoScore};
use dca::Label;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!("15 of 40 frames: {:?}", select_frames(40, 15)?);

    let videos = vec![
        VideoScore::new("r0", Label::Real, vec![0.1, 0.2, 0.15])?,
        VideoScore::new("r1", Label::Real, vec![0.4, 0.3])?,
        VideoScore::new("r2", Label::Real, vec![0.6])?,
        VideoScore::new("f0", Label::Fake, vec![0.7, 0.9])?,
        VideoScore::new("f1", Label::Fake, vec![0.35, 0.45])?,
        VideoScore::new("f2", Label::Fake, vec![0.8])?,
    ];
    let scores: Vec<f64> = videos.iter().map(|v| v.pooled).collect();
    let labels: Vec<Label> = videos.iter().map(|v| v.label).collect();
    let auc = roc_auc(&scores, &labels)?;
    let ci = bootstrap_ci(&videos, 1000, 42)?;
    println!(
        "AUC {auc:.4}  95% CI [{:.4}, {:.4}]  ({} single-class resamples redrawn)",
        ci.low, ci.high, ci.n_redrawn
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
