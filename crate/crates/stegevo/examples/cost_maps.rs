//! Computes all six built-in cost functions on a synthetic cover and
//! renders each cost map to a PGM file.
//!
//! ```bash
//! cargo run --release --example cost_maps
//! ```

use stegevo::cost::CostAlgo;
use stegevo::map::{save_map, MapScaling};
use stegevo::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::temp_dir().join("stegevo-cost-maps");
    std::fs::create_dir_all(&out_dir)?;

    let cover = synth::textured_cover(128, 128, 2024);
    stegevo::image::save_image(&cover, out_dir.join("cover.pgm"))?;
    println!("cover: {}", out_dir.join("cover.pgm").display());

    for algo in CostAlgo::ALL {
        let pair = algo.compute(&cover);
        let finite: Vec<f64> = pair
            .rho_plus
            .values()
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        let wet = pair.rho_plus.len() - finite.len();
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        let (lo, hi) = pair.rho_plus.finite_range().unwrap();
        println!(
            "{:7}  mean {:>12.4}  min {:>10.4}  max {:>12.4}  wet(+1) {:>4} px",
            algo.name(),
            mean,
            lo,
            hi,
            wet
        );

        let path = out_dir.join(format!("{}_plus.pgm", algo.name()));
        save_map(&pair.rho_plus, &path, MapScaling::Direct)?;
        println!("         -> {}", path.display());
    }
    Ok(())
}
