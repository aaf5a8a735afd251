// Fingerprint length for each region set, and a skipped frame.
//
// ```bash
// cargo run -p dca-core --example frame_fingerprint
// ```

use dca::coactivation::{fingerprint_raw, FrameOutcome, VariantId};
use dca::container::{RegionCode, TokenGrid};
use dca::normalize::NormStats;
use dca::regions::{RegionSet, SamplingPolicy};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let d = 16;
    let mut grid = TokenGrid::<f32>::zeros(0, 6, 4, d);
    let order = [
        RegionCode::Skin,
        RegionCode::Eyes,
        RegionCode::Hair,
        RegionCode::Nose,
        RegionCode::Mouth,
        RegionCode::Background,
    ];
    for (p, label) in grid.labels.iter_mut().enumerate() {
        *label = order[p / 4];
    }
    grid.tokens.indexed_iter_mut().for_each(|((p, j), v)| *v = ((p * 7 + j * 3) % 11) as f32 - 5.0);
    let stats = NormStats::identity(d);

    for set in [RegionSet::emn(), RegionSet::emn_skin(), RegionSet::eyes_mouth(), RegionSet::all_five()] {
        let policy = SamplingPolicy::new(4, 0, set.clone())?;
        let FrameOutcome::Fingerprint(fp) = fingerprint_raw(&grid, &stats, "v", &policy, VariantId::Dca)? else {
            unreachable!("every region is present");
        };
        println!("{:<10} pairs={:>2} M={}", set.name(), set.pairs().len(), fp.len());
    }

    grid.labels.iter_mut().filter(|l| **l == RegionCode::Nose).for_each(|l| *l = RegionCode::Skin);
    let policy = SamplingPolicy::new(4, 0, RegionSet::emn())?;
    if let FrameOutcome::Skipped { missing, .. } = fingerprint_raw(&grid, &stats, "v", &policy, VariantId::Dca)? {
        println!("frame skipped, missing {missing:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
