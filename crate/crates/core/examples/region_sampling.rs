// Deterministic K-token sampling per region.
//
// ```bash
// cargo run -p dca-core --example region_sampling
// ```

use dca::container::{RegionCode, TokenGrid};
use dca::regions::{assign_regions, sample_region, RegionSet, SamplingPolicy, StreamId};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut grid = TokenGrid::<f32>::zeros(3, 4, 8, 2);
    for (p, label) in grid.labels.iter_mut().enumerate() {
        *label = match p {
            0..=11 => RegionCode::Eyes,
            12..=15 => RegionCode::Nose,
            16..=27 => RegionCode::Mouth,
            _ => RegionCode::Background,
        };
    }
    for (p, mut row) in grid.tokens.rows_mut().into_iter().enumerate() {
        row.fill(p as f32);
    }

    let buckets = assign_regions(&grid);
    for (region, patches) in &buckets {
        println!("{:<10} {:>2} patches", region.name(), patches.len());
    }

    let policy = SamplingPolicy::new(6, 99, RegionSet::emn())?;
    for &region in policy.region_set.regions() {
        let stream = StreamId {
            video_id: "clip-001",
            frame_index: grid.frame_index,
            region,
        };
        let s = sample_region(&grid, region, &policy, stream)?;
        let again = sample_region(&grid, region, &policy, stream)?;
        assert_eq!(s, again);
        println!(
            "{:<6} indices {:?} with_replacement={}",
            region.name(),
            s.indices,
            s.drew_with_replacement
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
