// Write a two-frame `DCAF` container, read it back, and inspect the header.
//
// ```bash
// cargo run -p dca-core --example container_roundtrip
// ```

use dca::container::{decode, encode, ContainerHeader, RegionCode, TokenGrid};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (h, w, d) = (2, 3, 4);
    let header = ContainerHeader::new(h, w, d, 2, "toy/block18/raw");
    let frames: Vec<TokenGrid<f32>> = (0..2)
        .map(|f| {
            let mut g = TokenGrid::zeros(f, h, w, d as usize);
            g.tokens.iter_mut().enumerate().for_each(|(i, v)| *v = (i as f32) * 0.5 - f as f32);
            g.labels = vec![
                RegionCode::Eyes,
                RegionCode::Eyes,
                RegionCode::Nose,
                RegionCode::Mouth,
                RegionCode::Skin,
                RegionCode::Background,
            ];
            g
        })
        .collect();

    let bytes = encode(&header, &frames)?;
    println!("{} bytes (expected {})", bytes.len(), header.file_len());
    let (back_header, back_frames) = decode(&bytes)?;
    assert_eq!(back_header, header);
    assert_eq!(back_frames, frames);

    let mut truncated = bytes.clone();
    truncated.truncate(bytes.len() - 1);
    println!("truncated file: {}", decode(&truncated).unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
