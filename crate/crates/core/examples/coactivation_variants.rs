// Every pair operator on the same two region samples.
//
// ```bash
// cargo run -p dca-core --example coactivation_variants
// ```

use dca::coactivation::{PairOutput, VariantId};
use ndarray::{array, Array2};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Two regions sharing a positive mean on dim 0 and opposite means on dim 1.
    let f1: Array2<f64> = array![[1.2, 0.9, 0.1], [0.8, 1.1, -0.2], [1.0, 1.0, 0.3]];
    let f2: Array2<f64> = array![[0.9, -1.0, 0.2], [1.1, -0.8, -0.1], [1.0, -1.2, 0.0]];

    for variant in VariantId::ALL {
        match variant.apply(f1.view(), f2.view())? {
            PairOutput::Vector(v) => println!("{:<18} {:.4}", variant.name(), v),
            PairOutput::Scalar(s) => println!("{:<18} {s:.4}", variant.name()),
        }
    }

    // Centering discards the shared mean that dca keeps.
    let shifted = &f1 + 5.0;
    let cc = VariantId::CrossCovariance.apply(f1.view(), f2.view())?;
    let cc_shifted = VariantId::CrossCovariance.apply(shifted.view(), f2.view())?;
    assert!(cc.as_slice().iter().zip(cc_shifted.as_slice()).all(|(a, b)| (a - b).abs() < 1e-12));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
