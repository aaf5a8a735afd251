// Class-balanced logistic probe on an imbalanced toy problem.
//
// ```bash
// cargo run -p dca-core --example probe_training
// ```

use dca::probe::{fit_probe, score, ProbeConfig, ProbeModel};
use dca::Label;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 1.0)?;
    let (n_real, n_fake, d) = (90, 30, 5);
    let mut x = Array2::zeros((n_real + n_fake, d));
    let mut labels = Vec::new();
    for i in 0..n_real + n_fake {
        let fake = i >= n_real;
        labels.push(if fake { Label::Fake } else { Label::Real });
        for j in 0..d {
            let shift = if fake && j < 2 { 1.5 } else { 0.0 };
            x[[i, j]] = shift + noise.sample(&mut rng);
        }
    }

    let fit = fit_probe(x.view(), &labels, &ProbeConfig::default())?;
    println!(
        "class weights {:?}, {} iterations, stop: {}",
        fit.model.class_weights,
        fit.report.iterations,
        fit.report.stop.name()
    );
    println!("weights {:.3?}", fit.model.weights);

    let model = ProbeModel::from_bytes(&fit.model.to_bytes())?;
    println!("P(fake | first real row) = {:.3}", score(&model, x.row(0))?);
    println!("P(fake | last fake row)  = {:.3}", score(&model, x.row(n_real + n_fake - 1))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
