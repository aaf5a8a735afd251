// Every variant trained and evaluated on the mean-coded synthetic dataset.
//
// ```bash
// cargo run --release -p dca-core --example synthetic_ablation
// ```

use dca::coactivation::VariantId;
use dca::eval::BootstrapConfig;
use dca::pipeline::{ablate, format_ablation_table, AblationRow, FingerprintConfig};
use dca::probe::ProbeConfig;
use dca::synth::{generate, SyntheticConfig};

pub fn run_example() -> Result<Vec<AblationRow>, Box<dyn std::error::Error>> {
    let small = std::env::var_os("DCA_EXAMPLE_FULL").is_none();
    let config = SyntheticConfig {
        n_videos_per_class: if small { 40 } else { 200 },
        ..SyntheticConfig::default()
    };
    let dataset = generate(&config)?;
    let rows = ablate(
        &dataset,
        None,
        &FingerprintConfig::default(),
        &ProbeConfig::default(),
        BootstrapConfig::default(),
        &VariantId::ALL,
    )?;
    print!("{}", format_ablation_table(&rows));
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
