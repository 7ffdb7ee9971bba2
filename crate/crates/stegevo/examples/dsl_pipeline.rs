//! The cost-pipeline language end to end: parse a custom program,
//! interpret it under resource limits, compare a shipped transcription
//! against its native twin, and show what diagnostics look like.
//!
//! ```bash
//! cargo run --release --example dsl_pipeline
//! ```

use stegevo::cost::CostAlgo;
use stegevo::dsl::{self, interpret, InterpLimits};
use stegevo::synth;

const CUSTOM: &str = "\
fn compute_cost_multiscale_v0(image) {
    let fine = absconv(image, kb());
    let coarse = absconv(image, 0.25 * [1, 1; -1, -1]);
    let texture = conv(fine, avg(3)) + conv(coarse, gauss(1.5, 4));
    let rho = conv(recip(texture, 1e-8), gauss(2, 4));
    return (wet_boundary(rho, image, 1, 1), wet_boundary(rho, image, 1, -1));
}
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cover = synth::textured_cover(96, 96, 5);
    let limits = InterpLimits::default();

    // a hand-written multi-scale candidate
    let program = dsl::parse(CUSTOM)?;
    println!(
        "parsed `{}`: {} AST nodes, canonical length {} chars",
        program.name(),
        program.node_count(),
        program.length()
    );
    let pair = interpret(&program, &cover, &limits)?;
    let (lo, hi) = pair.rho_plus.finite_range().unwrap();
    println!("cost range [{lo:.4}, {hi:.4}]\n");

    // the shipped transcription of HILL matches the native implementation
    let shipped = dsl::shipped_program(CostAlgo::Hill);
    let interpreted = interpret(&shipped, &cover, &limits)?;
    let native = CostAlgo::Hill.compute(&cover);
    let max_rel = interpreted
        .rho_plus
        .values()
        .iter()
        .zip(native.rho_plus.values())
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0f64, f64::max)
        ;
    println!("shipped HILL transcription vs native: max relative gap {max_rel:.2e}\n");

    // malformed input produces positioned diagnostics, never a crash
    let broken = CUSTOM.replace("recip", "reciip");
    match dsl::parse(&broken) {
        Err(e) => println!("diagnostics for a typo:\n{e}"),
        Ok(_) => unreachable!("reciip is not a builtin"),
    }
    Ok(())
}
