// Statistics, fingerprints, probe and evaluation on split manifests.
//
// ```bash
// cargo run --release -p dca-core --example end_to_end
// ```

use dca::eval::{BootstrapConfig, EvalReport};
use dca::manifest::Manifest;
use dca::pipeline::{evaluate, fit_stats, train_from_source, FingerprintConfig};
use dca::probe::ProbeConfig;
use dca::synth::{generate, SyntheticConfig};

pub fn run_example() -> Result<EvalReport, Box<dyn std::error::Error>> {
    let config = SyntheticConfig {
        d: 32,
        n_videos_per_class: 30,
        frames_per_video: 3,
        ..SyntheticConfig::default()
    };
    let dir = std::env::temp_dir().join(format!("dca-e2e-example-{}", std::process::id()));
    let written = generate(&config)?.write(&dir)?;
    let train = Manifest::read(&written.train)?;
    let eval = Manifest::read(&written.eval)?;

    let stats = fit_stats(&train)?;
    let fp = FingerprintConfig::default();
    let (run, fit) = train_from_source(&train, &stats, &fp, &ProbeConfig::default())?;
    println!("trained on {} frames of M={}", run.set.len(), run.set.dim);

    // Statistics and fitting refuse evaluation-tagged videos.
    assert!(fit_stats(&eval).is_err());

    let report = evaluate(&fit.model, &eval, &stats, &fp, BootstrapConfig::default())?;
    print!("{}", report.to_table());
    std::fs::remove_dir_all(&dir)?;
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
