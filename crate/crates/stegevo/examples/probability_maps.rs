//! Renders the per-pixel modification probability of each cost function
//! at 0.4 bpp, brightness-inverted so bright areas mark pixels unlikely
//! to change.
//!
//! ```bash
//! cargo run --release --example probability_maps
//! ```

use stegevo::cost::CostAlgo;
use stegevo::embed::{change_probabilities, payload_entropy, solve_lambda};
use stegevo::map::{save_map, MapScaling};
use stegevo::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::temp_dir().join("stegevo-probability-maps");
    std::fs::create_dir_all(&out_dir)?;

    let cover = synth::textured_cover(256, 256, 31);
    stegevo::image::save_image(&cover, out_dir.join("cover.pgm"))?;

    let alpha = 0.4;
    for algo in CostAlgo::ALL {
        let costs = algo.compute(&cover);
        let lambda = solve_lambda(&costs, alpha, 1e-3)?;
        let pm = change_probabilities(&costs, lambda);
        let bits = payload_entropy(&pm);

        let path = out_dir.join(format!("prob_{}.pgm", algo.name()));
        save_map(&pm.total_change(), &path, MapScaling::Inverted)?;
        println!(
            "{:7}  lambda {:>9.4}  payload {:>9.1} bits  -> {}",
            algo.name(),
            lambda,
            bits,
            path.display()
        );
    }
    Ok(())
}
